#pragma once

// Compositional compression of disjoint regions and causal adjacency.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "causaloid/prob_table.hpp"
#include "causaloid/tomography.hpp"

namespace causaloid {

// Pairwise-disjoint constituents, ordered by least location.
class CompositeRegion {
 public:
  explicit CompositeRegion(std::vector<Region> constituents);

  const std::vector<Region>& constituents() const { return constituents_; }
  std::size_t size() const { return constituents_.size(); }
  const Region& united() const { return united_; }

  bool operator==(const CompositeRegion& other) const {
    return constituents_ == other.constituents_;
  }

 private:
  std::vector<Region> constituents_;
  Region united_;
};

// Linearisation of a product of Omega sets, last factor fastest. Digits are
// positions within each factor's Omega (not Gamma indices).
class ProductIndex {
 public:
  explicit ProductIndex(std::vector<std::size_t> radix);

  std::size_t size() const { return size_; }
  const std::vector<std::size_t>& radix() const { return radix_; }
  std::size_t encode(std::span<const std::size_t> digits) const;
  std::vector<std::size_t> decode(std::size_t index) const;

 private:
  std::vector<std::size_t> radix_;
  std::size_t size_ = 1;
};

ProductIndex product_of(std::span<const OmegaSet> omegas);

// M[(l_1..l_n), e] = p_{l_1..l_n} under exterior e. The table's regions must
// be the omegas' regions in the same order. Throws DegenerateExterior when
// the table has a single exterior column.
MeasurementMatrix joint_fiducial_matrix(const ProbTable& table, std::span<const OmegaSet> omegas);

// Greedy selection over the product index set; parent_size is the product size.
OmegaSet find_composite_omega(const MeasurementMatrix& m, double tol = 1e-9);

struct CompositionalLambda {
  CompositeRegion composite;
  std::vector<OmegaSet> factors;  // tomographic Omega of each constituent
  OmegaSet omega;                 // subset of the product of factors
  Eigen::MatrixXd matrix;         // prod |Omega_i| x |Omega_composite|
};

CompositionalLambda compute_compositional_lambda(const MeasurementMatrix& m,
                                                 const OmegaSet& composite_omega,
                                                 const CompositeRegion& composite,
                                                 std::vector<OmegaSet> factors, double tol = 1e-9);

// Omega_composite a strict subset of the product.
bool is_causally_adjacent(const OmegaSet& composite_omega, std::span<const OmegaSet> factor_omegas);

struct CompositeCompression {
  ProbTable table;
  MeasurementMatrix joint;
  CompositionalLambda lambda;
};

CompositeCompression compress_composite(const TheoryBackend& backend,
                                        const CompositeRegion& composite,
                                        std::span<const TomographicLambda> factors,
                                        const CompressionOptions& options = {});

struct AdjacencyEdge {
  std::size_t a = 0;  // indices into AdjacencyGraph::regions
  std::size_t b = 0;
  auto operator<=>(const AdjacencyEdge&) const = default;
};

struct PairCompression {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t omega_size = 0;
  std::size_t product_size = 0;
  bool adjacent = false;
};

struct AdjacencyGraph {
  std::vector<Region> regions;
  std::vector<AdjacencyEdge> edges;
  std::vector<PairCompression> pairs;
};

AdjacencyGraph adjacency_graph(const TheoryBackend& backend, std::span<const Region> regions,
                               const CompressionOptions& options = {});

// Two-region check that the order of first-level compression does not
// matter. Path A compresses the first region against the second region's
// full label set, then the second against the first's fiducials; path B
// does the reverse.
struct OrderSymmetryReport {
  bool omegas_agree = false;
  double max_fiducial_difference = 0.0;        // |P_A(l1 l2) - P_B(l1 l2)|
  double max_reconstruction_difference = 0.0;  // expand R1 first vs R2 first
  double max_table_difference = 0.0;           // either expansion vs the table
};

OrderSymmetryReport order_symmetry(const ProbTable& pair_table, const CompressionOptions& options = {});

}  // namespace causaloid
