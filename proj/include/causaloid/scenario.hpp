#pragma once

// Scenario files: a JSON description of systems, regions, exteriors and the
// requested composites and heralds.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "causaloid/backend.hpp"
#include "causaloid/composition.hpp"
#include "causaloid/error.hpp"
#include "causaloid/heralding.hpp"

namespace causaloid {

inline constexpr int kScenarioFormatVersion = 1;

struct SchemaIssue {
  std::string path;  // e.g. regions[1].instruments[0].family
  std::size_t line = 0;  // 1-based, 0 when unknown
  std::string message;
};

class SchemaErrors : public Error {
 public:
  explicit SchemaErrors(std::vector<SchemaIssue> issues);
  const std::vector<SchemaIssue>& issues() const { return issues_; }

 private:
  std::vector<SchemaIssue> issues_;
};

struct HeraldSpec {
  std::string name;
  std::string target;               // "region:label"
  std::vector<std::string> given;   // "region:label" each
  std::map<std::string, std::string> procedures;  // region -> action
};

struct Scenario {
  std::string name;
  std::string theory;
  std::uint64_t seed = 0;
  std::shared_ptr<const TheoryBackend> backend;
  std::vector<CompositeRegion> composites;
  std::vector<HeraldSpec> heralds;
  bool adjacency = false;
  bool span_check = true;
  bool order_symmetry = true;
  bool reconstruction = true;
  double rank_tol = 1e-9;
  double residual_tol = 1e-9;
  double herald_tol = kDefaultHeraldTol;
  std::size_t table_cap = kDefaultTableCap;
};

// Throws IoError if the file cannot be read, SchemaErrors listing every
// problem found otherwise.
Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text);

// "P2:3" (Gamma index) or "P2:action/outcome" (names) for an elementary
// region named by its location.
HeraldTerm parse_term(const Layout& layout, const std::string& text);
// Action by index or by name.
ActionId parse_action(const Layout& layout, LocationId x, const std::string& text);
LocationId parse_location(const Layout& layout, const std::string& name);

HeraldQuery make_query(const Layout& layout, const HeraldSpec& spec);

}  // namespace causaloid
