#pragma once

// Tomographic compression of a single region: fiducial set, Lambda matrix,
// r-vectors, states and the generalised Born rule.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "causaloid/prob_table.hpp"

namespace causaloid {

struct CompressionOptions {
  double rank_tol = 1e-9;      // relative residual for joining a fiducial set
  double residual_tol = 1e-9;  // relative residual allowed in Lambda solves
  std::size_t table_cap = kDefaultTableCap;
};

// Strictly increasing subset of a parent index set (Gamma_R at level one,
// the product of constituent Omega sets at level two).
struct OmegaSet {
  Region region;
  std::vector<std::size_t> indices;
  std::size_t parent_size = 0;

  std::size_t size() const { return indices.size(); }
  std::optional<std::size_t> position_of(std::size_t parent_index) const;
  bool operator==(const OmegaSet&) const = default;
};

// Rows indexed by Gamma_R (or a product of Omega sets), columns by
// generalised preparations.
struct MeasurementMatrix {
  Region region;
  Eigen::MatrixXd values;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

enum class ScanOrder { Forward, Reverse };

// Greedy Gram-Schmidt scan. A row joins when its residual against the rows
// already chosen exceeds tol * max(1, |row|). Returns ascending indices.
std::vector<std::size_t> select_independent_rows(const Eigen::MatrixXd& m, double tol,
                                                 ScanOrder order = ScanOrder::Forward);

// Coefficients C with m.row(i) = sum_j C(i, j) m.row(basis[j]), from a QR
// least-squares solve against the basis rows. Basis rows get exact unit rows.
// Throws ResidualTooLarge when a row leaves the span.
Eigen::MatrixXd express_rows_in_basis(const Eigen::MatrixXd& m, std::span<const std::size_t> basis,
                                      double tol);

// Columns: the other regions' labels of the table (slowest first) followed
// by the exteriors, so other regions act as generalised preparations.
MeasurementMatrix build_measurement_matrix(const ProbTable& table, const Region& region);

OmegaSet find_fiducial_set(const MeasurementMatrix& m, double tol = 1e-9,
                           ScanOrder order = ScanOrder::Forward);

struct TomographicLambda {
  Region region;
  OmegaSet omega;
  Eigen::MatrixXd matrix;  // |Gamma| x |Omega|
};

TomographicLambda compute_tomographic_lambda(const MeasurementMatrix& m, const OmegaSet& omega,
                                             double tol = 1e-9);

struct RVector {
  OmegaSet context;
  Eigen::VectorXd components;
};

struct StateVector {
  OmegaSet context;
  Eigen::VectorXd components;
};

RVector r_vector(std::size_t label, const TomographicLambda& lambda);

StateVector state_vector(const MeasurementMatrix& m, const OmegaSet& omega, std::size_t exterior);

// p = r . p. Raw value, never clamped.
double born_rule(const RVector& r, const StateVector& p);

// Probability as shown in reports: clamped to [0, 1], with a flag when the
// raw value strays beyond [-1e-9, 1 + 1e-9].
struct ReportedProbability {
  double raw = 0.0;
  double shown = 0.0;
  bool out_of_range = false;
};
ReportedProbability report_probability(double raw);

// Table, matrix, fiducial set and Lambda for one region with everything
// else in the exterior.
struct RegionCompression {
  GammaSet gamma;
  MeasurementMatrix matrix;
  TomographicLambda lambda;
};

RegionCompression compress_region(const TheoryBackend& backend, const Region& region,
                                  const CompressionOptions& options = {});

}  // namespace causaloid
