#pragma once

// Prediction heralding: is prob(target | conditions) independent of what
// happens outside the named regions, and if so what is it.

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "causaloid/causaloid.hpp"
#include "causaloid/prob_table.hpp"

namespace causaloid {

// A region together with one label index of its Gamma set.
struct HeraldTerm {
  Region region;
  std::size_t label = 0;
};

struct HeraldQuery {
  HeraldTerm target;
  std::vector<HeraldTerm> conditions;
  // Optional action assignment; when an entry is present it must agree with
  // the action recorded in the corresponding label.
  std::map<LocationId, ActionId> procedures;
};

struct HeraldWitness {
  std::size_t low_exterior = 0;
  std::size_t high_exterior = 0;
  double low = 0.0;
  double high = 0.0;
};

struct HeraldResult {
  bool well_defined = false;
  std::optional<double> p;   // clamped to [0, 1]; present iff well_defined
  double p_raw = 0.0;        // u.v / v.v
  double residual = 0.0;     // |u - p_raw v| / |v|
  std::optional<HeraldWitness> witness;
};

inline constexpr double kDefaultHeraldTol = 1e-8;

// Labels of `region` performing `actions` (aligned with the region's
// locations), all outcomes. Throws UnknownProcedure.
std::vector<std::size_t> consistent_labels(const GammaSet& gamma, std::span<const ActionId> actions);

// Throws ZeroDenominatorVector when |v| <= tol, MissingEntry when the joint
// Lambda is unavailable. With a table over the query's regions, a witness
// pair of exteriors is attached to queries that are not well-defined.
HeraldResult herald(const Causaloid& causaloid, const HeraldQuery& query,
                    double tol = kDefaultHeraldTol, const ProbTable* table = nullptr);

// The conditional at a single exterior of a table whose regions are exactly
// the query's regions. Throws ZeroDenominator when the denominator is at
// most 1e-12.
double conditional_from_table(const ProbTable& table, const HeraldQuery& query,
                              std::size_t exterior);

}  // namespace causaloid
