#include "causaloid/tomography.hpp"

#include <algorithm>
#include <cmath>

#include "causaloid/error.hpp"

namespace causaloid {

std::optional<std::size_t> OmegaSet::position_of(std::size_t parent_index) const {
  auto it = std::lower_bound(indices.begin(), indices.end(), parent_index);
  if (it == indices.end() || *it != parent_index) return std::nullopt;
  return static_cast<std::size_t>(it - indices.begin());
}

std::vector<std::size_t> select_independent_rows(const Eigen::MatrixXd& m, double tol,
                                                 ScanOrder order) {
  const Eigen::Index n = m.rows();
  const Eigen::Index cols = m.cols();
  Eigen::MatrixXd q(cols, std::min(n, cols));  // orthonormal basis, column-wise
  Eigen::Index rank = 0;
  std::vector<std::size_t> chosen;
  Eigen::VectorXd residual(cols);
  for (Eigen::Index step = 0; step < n && rank < cols; ++step) {
    const Eigen::Index i = order == ScanOrder::Forward ? step : n - 1 - step;
    residual = m.row(i).transpose();
    const double norm = residual.norm();
    // Two passes of classical Gram-Schmidt keep the basis orthogonal to
    // working precision.
    for (int pass = 0; pass < 2 && rank > 0; ++pass) {
      const auto basis = q.leftCols(rank);
      residual -= basis * (basis.transpose() * residual);
    }
    const double r = residual.norm();
    if (r > tol * std::max(1.0, norm)) {
      q.col(rank++) = residual / r;
      chosen.push_back(static_cast<std::size_t>(i));
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

Eigen::MatrixXd express_rows_in_basis(const Eigen::MatrixXd& m, std::span<const std::size_t> basis,
                                      double tol) {
  const Eigen::Index n = m.rows();
  const auto k = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd coefficients = Eigen::MatrixXd::Zero(n, k);
  if (k > 0) {
    Eigen::MatrixXd fiducial(k, m.cols());
    for (Eigen::Index j = 0; j < k; ++j) {
      if (basis[static_cast<std::size_t>(j)] >= static_cast<std::size_t>(n))
        fail(ErrorCode::InvalidArgument, "basis row out of range");
      fiducial.row(j) = m.row(static_cast<Eigen::Index>(basis[static_cast<std::size_t>(j)]));
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(fiducial.transpose());
    coefficients = qr.solve(m.transpose()).transpose();
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto row = static_cast<Eigen::Index>(basis[static_cast<std::size_t>(j)]);
      coefficients.row(row).setZero();
      coefficients(row, j) = 1.0;
    }
    const Eigen::MatrixXd residual = m - coefficients * fiducial;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = residual.row(i).norm();
      if (!(r <= tol * std::max(1.0, m.row(i).norm())))
        fail(ErrorCode::ResidualTooLarge,
             "row " + std::to_string(i) + " leaves the fiducial span (residual " +
                 std::to_string(r) + ")");
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      if (m.row(i).norm() > tol)
        fail(ErrorCode::ResidualTooLarge, "non-zero row with an empty fiducial set");
  }
  return coefficients;
}

MeasurementMatrix build_measurement_matrix(const ProbTable& table, const Region& region) {
  const std::size_t pos = table.region_position(region);
  const std::size_t n_rows = table.gammas[pos].size();
  const auto total_rows = static_cast<std::size_t>(table.values.rows());
  const std::size_t n_exteriors = table.exteriors.size();
  if (n_rows == 0 || total_rows % n_rows != 0 ||
      static_cast<std::size_t>(table.values.cols()) != n_exteriors)
    fail(ErrorCode::IncompleteTable, "table does not cover Gamma of region " + region.to_string());
  const std::size_t n_other = total_rows / n_rows;

  MeasurementMatrix m{region, Eigen::MatrixXd(static_cast<Eigen::Index>(n_rows),
                                              static_cast<Eigen::Index>(n_other * n_exteriors))};
  std::vector<std::size_t> other_radix;
  for (std::size_t r = 0; r < table.gammas.size(); ++r)
    if (r != pos) other_radix.push_back(table.gammas[r].size());
  for (std::size_t row = 0; row < total_rows; ++row) {
    const auto idx = table.label_indices(row);
    std::size_t other = 0;
    for (std::size_t r = 0, k = 0; r < idx.size(); ++r)
      if (r != pos) other = other * other_radix[k++] + idx[r];
    m.values.block(static_cast<Eigen::Index>(idx[pos]),
                   static_cast<Eigen::Index>(other * n_exteriors), 1,
                   static_cast<Eigen::Index>(n_exteriors)) =
        table.values.row(static_cast<Eigen::Index>(row));
  }
  return m;
}

OmegaSet find_fiducial_set(const MeasurementMatrix& m, double tol, ScanOrder order) {
  if (m.rows() == 0 || m.cols() == 0)
    fail(ErrorCode::InvalidArgument, "measurement matrix is empty");
  return OmegaSet{m.region, select_independent_rows(m.values, tol, order), m.rows()};
}

TomographicLambda compute_tomographic_lambda(const MeasurementMatrix& m, const OmegaSet& omega,
                                             double tol) {
  if (omega.region != m.region || omega.parent_size != m.rows())
    fail(ErrorCode::ContextMismatch, "fiducial set does not index this matrix");
  if (!std::is_sorted(omega.indices.begin(), omega.indices.end()) ||
      std::adjacent_find(omega.indices.begin(), omega.indices.end()) != omega.indices.end())
    fail(ErrorCode::InvalidArgument, "fiducial indices must be strictly increasing");
  return TomographicLambda{m.region, omega, express_rows_in_basis(m.values, omega.indices, tol)};
}

RVector r_vector(std::size_t label, const TomographicLambda& lambda) {
  if (label >= static_cast<std::size_t>(lambda.matrix.rows()))
    fail(ErrorCode::UnknownLabel, "label " + std::to_string(label) + " not in Gamma of region " +
                                      lambda.region.to_string());
  return RVector{lambda.omega, lambda.matrix.row(static_cast<Eigen::Index>(label)).transpose()};
}

StateVector state_vector(const MeasurementMatrix& m, const OmegaSet& omega, std::size_t exterior) {
  if (exterior >= m.cols())
    fail(ErrorCode::UnknownExterior, "exterior " + std::to_string(exterior) + " out of range");
  if (omega.region != m.region || omega.parent_size != m.rows())
    fail(ErrorCode::ContextMismatch, "fiducial set does not index this matrix");
  StateVector p{omega, Eigen::VectorXd(static_cast<Eigen::Index>(omega.size()))};
  for (std::size_t j = 0; j < omega.size(); ++j)
    p.components(static_cast<Eigen::Index>(j)) =
        m.values(static_cast<Eigen::Index>(omega.indices[j]), static_cast<Eigen::Index>(exterior));
  return p;
}

double born_rule(const RVector& r, const StateVector& p) {
  if (r.context != p.context || r.components.size() != p.components.size())
    fail(ErrorCode::ContextMismatch, "r-vector and state live on different fiducial sets");
  return r.components.dot(p.components);
}

ReportedProbability report_probability(double raw) {
  ReportedProbability out{raw, std::clamp(raw, 0.0, 1.0), raw < -1e-9 || raw > 1.0 + 1e-9};
  return out;
}

RegionCompression compress_region(const TheoryBackend& backend, const Region& region,
                                  const CompressionOptions& options) {
  const Region regions[] = {region};
  const ProbTable table = build_prob_table(backend, regions, options.table_cap);
  MeasurementMatrix m = build_measurement_matrix(table, region);
  const OmegaSet omega = find_fiducial_set(m, options.rank_tol);
  TomographicLambda lambda = compute_tomographic_lambda(m, omega, options.residual_tol);
  return RegionCompression{table.gammas.front(), std::move(m), std::move(lambda)};
}

}  // namespace causaloid
