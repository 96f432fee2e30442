#pragma once

// Label enumeration and exact probability tables.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causaloid/backend.hpp"
#include "causaloid/operational.hpp"

namespace causaloid {

// alpha: one (action, outcome) per location of a region, aligned with
// Region::locations().
struct MeasurementLabel {
  std::vector<ActionId> actions;
  std::vector<OutcomeId> outcomes;

  auto operator<=>(const MeasurementLabel&) const = default;
};

// Gamma_R, ordered lexicographically by (action tuple, outcome tuple).
struct GammaSet {
  Region region;
  std::vector<MeasurementLabel> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t index_of(const MeasurementLabel& label) const;
  // Per-location (action, outcome) pairs of label `index`.
  std::vector<LocalLabel> local_labels(std::size_t index) const;
};

GammaSet enumerate_labels(const TheoryBackend& backend, const Region& region);
GammaSet enumerate_labels(const Layout& layout, const Region& region);

// Everything outside the tabulated regions: one boundary per wire plus a
// label for each remaining location.
struct ExteriorConfiguration {
  std::vector<WireBoundary> boundary;
  std::vector<LocationId> conditioned;       // ascending
  std::vector<std::size_t> conditioned_labels;  // label index in Gamma_x

  auto operator<=>(const ExteriorConfiguration&) const = default;
  std::string to_string() const;
};

// Lexicographic enumeration, last component fastest: wire 0 (preparation,
// effect), wire 1 (...), then conditioned locations ascending.
std::vector<ExteriorConfiguration> enumerate_exteriors(const TheoryBackend& backend,
                                                       std::span<const Region> regions);

inline constexpr std::size_t kDefaultTableCap = 10'000'000;

struct ProbTable {
  std::vector<Region> regions;
  std::vector<GammaSet> gammas;
  std::vector<ExteriorConfiguration> exteriors;
  // rows: joint label multi-index (last region fastest); columns: exteriors.
  Eigen::MatrixXd values;

  std::size_t row_index(std::span<const std::size_t> label_indices) const;
  std::vector<std::size_t> label_indices(std::size_t row) const;
  std::size_t region_position(const Region& region) const;  // UnknownRegion if absent
};

double joint_prob(const TheoryBackend& backend, std::span<const Region> regions,
                  std::span<const MeasurementLabel> labels, const ExteriorConfiguration& exterior);

ProbTable build_prob_table(const TheoryBackend& backend, std::span<const Region> regions,
                           std::size_t cap = kDefaultTableCap);

struct NormalizationReport {
  double max_total = 0.0;        // largest outcome-summed weight
  double max_unit_defect = 0.0;  // deviation from 1 where the readout is complete
  std::size_t complete_exteriors = 0;
};

// Checks entries lie in [0, 1 + 1e-12] and, for every exterior and joint
// procedure, that the outcome-summed weight is at most 1 (exactly 1 when
// every wire reads out with its unit effect and nothing is conditioned).
// Throws BackendError on violation.
NormalizationReport check_normalization(const TheoryBackend& backend, const ProbTable& table);

struct SpanReport {
  Region region;
  std::size_t rank = 0;
  std::size_t extended_rank = 0;
  std::size_t exteriors = 0;
  std::size_t extended_exteriors = 0;
};

// Compares the rank of the region's measurement matrix under the declared
// exteriors with the rank after doubling preparations and effects. Throws
// SpanDeficient if the rank grows.
SpanReport validate_exterior_span(const TheoryBackend& backend, const Region& region,
                                  double tol = 1e-9, std::uint64_t seed = 0x5eed);

}  // namespace causaloid
