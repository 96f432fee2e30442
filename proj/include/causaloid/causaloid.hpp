#pragma once

// The Causaloid: a registry of Lambda matrices for every region of interest,
// plus the meta rules that deduce the entries it does not store.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causaloid/backend.hpp"
#include "causaloid/composition.hpp"
#include "causaloid/prob_table.hpp"
#include "causaloid/tomography.hpp"

namespace causaloid {

struct ElementaryEntry {
  GammaSet gamma;
  TomographicLambda lambda;
};

// Composite entries are keyed by the union of their constituents. The
// constituents are always elementary regions.
struct CompositeEntry {
  CompositionalLambda lambda;
};

inline constexpr const char* kRuleIdentity = "R0";
inline constexpr const char* kRuleTensorFactorization = "R1";

// A rule together with the composites it is responsible for.
struct MetaRule {
  std::string id;
  std::vector<CompositeRegion> regions;
};

class Causaloid {
 public:
  Causaloid() = default;
  Causaloid(std::string theory, Layout layout);

  const std::string& theory() const { return theory_; }
  const Layout& layout() const { return layout_; }

  // Throws ContextMismatch if the Lambda does not fit the layout.
  void add(ElementaryEntry entry);
  // Throws MissingEntry unless every constituent is present, ContextMismatch
  // if the factor Omega sets differ from the stored ones.
  void add(CompositeEntry entry);
  void add_rule(MetaRule rule);

  const std::map<LocationId, ElementaryEntry>& elementary_entries() const { return elementary_; }
  const std::map<Region, CompositeEntry>& composite_entries() const { return composites_; }
  const std::vector<MetaRule>& rules() const { return rules_; }

  const ElementaryEntry& elementary(LocationId x) const;
  const OmegaSet& omega(LocationId x) const { return elementary(x).lambda.omega; }

  bool stores(const Region& united) const { return composites_.count(united) > 0; }
  // Stored entry, else one deduced by a registered rule. Throws MissingEntry.
  CompositionalLambda composite(const Region& united) const;
  bool available(const Region& united) const;

  // Gamma of any region of the layout, in the canonical label order.
  GammaSet gamma(const Region& region) const;

 private:
  std::string theory_;
  Layout layout_;
  std::map<LocationId, ElementaryEntry> elementary_;
  std::map<Region, CompositeEntry> composites_;
  std::vector<MetaRule> rules_;
};

// Tensor-factorisation deduction: Omega is the full product and Lambda the
// identity.
CompositionalLambda factorized_lambda(const CompositeRegion& composite,
                                      std::vector<OmegaSet> factors);

struct CausaloidBuild {
  Causaloid causaloid;
  std::vector<RegionCompression> regions;        // one per elementary region, ascending
  std::vector<CompositeCompression> composites;  // in request order
};

// Compresses every location of the layout and every requested composite.
CausaloidBuild build_causaloid(const TheoryBackend& backend,
                               std::span<const CompositeRegion> composites,
                               const CompressionOptions& options = {});

// Lambda' = Lambda * (Lambda restricted to the new rows)^-1. The new rows
// become exact unit rows. Throws SingularTransform when the restriction has
// condition number above 1e12.
TomographicLambda change_omega_basis(const TomographicLambda& lambda, const OmegaSet& new_omega);
CompositionalLambda change_omega_basis(const CompositionalLambda& lambda,
                                       const OmegaSet& new_omega);

// The state in the new basis: p' = (Lambda restricted to the new rows) p.
StateVector change_state_basis(const StateVector& p, const Eigen::MatrixXd& lambda,
                               const OmegaSet& new_omega);

// Joint r-vector of one label per location of `region` (Gamma_x indices in
// location order). A single location gives its tomographic r-vector.
RVector r_vector_joint(const Causaloid& causaloid, const Region& region,
                       std::span<const std::size_t> labels);

double evaluate_joint(const Causaloid& causaloid, const Region& region,
                      std::span<const std::size_t> labels, const StateVector& state);

// r1 (x)^Lambda r2 for disjoint regions. Either argument may live on an
// elementary or a composite Omega. Throws MissingEntry, InvalidArgument on
// overlap.
RVector causaloid_product(const RVector& r1, const RVector& r2, const Causaloid& causaloid);

// Rule request: apply `id` to the listed composites, or wherever it applies
// when the list is empty.
struct RuleRequest {
  std::string id;
  std::vector<Region> regions;
};

// Retained entries plus rules. Throws RuleInapplicable naming the region.
Causaloid meta_compress(const Causaloid& causaloid, std::span<const RuleRequest> rules);
// Every rule-deduced composite turned back into a stored entry.
Causaloid expand(const Causaloid& causaloid);

// Locations strictly between the constituents of a composite on a shared
// wire, outside the composite itself.
struct MediatorInfo {
  LocationId location = 0;
  std::size_t omega_size = 0;
  std::size_t full_dimension = 0;
  bool informationally_complete = false;
};

std::vector<MediatorInfo> mediators(const TheoryBackend& backend, const CompositeRegion& composite,
                                    const CompressionOptions& options = {});

}  // namespace causaloid
