#include "causaloid/composition.hpp"

#include <algorithm>

#include "causaloid/error.hpp"

namespace causaloid {

CompositeRegion::CompositeRegion(std::vector<Region> constituents)
    : constituents_(std::move(constituents)) {
  if (constituents_.size() < 2)
    fail(ErrorCode::InvalidArgument, "a composite region needs at least two constituents");
  std::sort(constituents_.begin(), constituents_.end(),
            [](const Region& a, const Region& b) { return a.least() < b.least(); });
  united_ = constituents_.front();
  for (std::size_t i = 1; i < constituents_.size(); ++i) {
    if (united_.intersects(constituents_[i]))
      fail(ErrorCode::InvalidArgument, "composite constituents must be disjoint");
    united_ = united_.united(constituents_[i]);
  }
}

ProductIndex::ProductIndex(std::vector<std::size_t> radix) : radix_(std::move(radix)) {
  for (std::size_t r : radix_) size_ *= r;
}

std::size_t ProductIndex::encode(std::span<const std::size_t> digits) const {
  std::size_t index = 0;
  for (std::size_t i = 0; i < radix_.size(); ++i) index = index * radix_[i] + digits[i];
  return index;
}

std::vector<std::size_t> ProductIndex::decode(std::size_t index) const {
  std::vector<std::size_t> digits(radix_.size());
  for (std::size_t i = radix_.size(); i-- > 0;) {
    digits[i] = index % radix_[i];
    index /= radix_[i];
  }
  return digits;
}

ProductIndex product_of(std::span<const OmegaSet> omegas) {
  std::vector<std::size_t> radix;
  for (const auto& o : omegas) radix.push_back(o.size());
  return ProductIndex(std::move(radix));
}

MeasurementMatrix joint_fiducial_matrix(const ProbTable& table, std::span<const OmegaSet> omegas) {
  if (omegas.size() != table.regions.size())
    fail(ErrorCode::IncompleteTable, "one fiducial set per table region expected");
  Region united = table.regions.front();
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (omegas[i].region != table.regions[i] || omegas[i].parent_size != table.gammas[i].size())
      fail(ErrorCode::IncompleteTable,
           "fiducial set does not match table region " + table.regions[i].to_string());
    united = united.united(table.regions[i]);
  }
  if (table.exteriors.size() < 2)
    fail(ErrorCode::DegenerateExterior,
         "composite " + united.to_string() +
             " has a single exterior configuration; embed it in a larger region");
  const ProductIndex product = product_of(omegas);
  MeasurementMatrix m{united, Eigen::MatrixXd(static_cast<Eigen::Index>(product.size()),
                                              table.values.cols())};
  std::vector<std::size_t> gamma_indices(omegas.size());
  for (std::size_t row = 0; row < product.size(); ++row) {
    const auto digits = product.decode(row);
    for (std::size_t i = 0; i < digits.size(); ++i)
      gamma_indices[i] = omegas[i].indices[digits[i]];
    m.values.row(static_cast<Eigen::Index>(row)) =
        table.values.row(static_cast<Eigen::Index>(table.row_index(gamma_indices)));
  }
  return m;
}

OmegaSet find_composite_omega(const MeasurementMatrix& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0)
    fail(ErrorCode::InvalidArgument, "joint fiducial matrix is empty");
  return OmegaSet{m.region, select_independent_rows(m.values, tol), m.rows()};
}

CompositionalLambda compute_compositional_lambda(const MeasurementMatrix& m,
                                                 const OmegaSet& composite_omega,
                                                 const CompositeRegion& composite,
                                                 std::vector<OmegaSet> factors, double tol) {
  if (factors.size() != composite.size())
    fail(ErrorCode::ContextMismatch, "one factor fiducial set per constituent expected");
  for (std::size_t i = 0; i < factors.size(); ++i)
    if (factors[i].region != composite.constituents()[i])
      fail(ErrorCode::ContextMismatch, "factor fiducial sets out of constituent order");
  const std::size_t product = product_of(factors).size();
  if (m.rows() != product || composite_omega.parent_size != product ||
      composite_omega.region != composite.united())
    fail(ErrorCode::ContextMismatch, "composite fiducial set does not index the product set");
  for (std::size_t k : composite_omega.indices)
    if (k >= product) fail(ErrorCode::InvalidArgument, "composite fiducial outside the product");
  return CompositionalLambda{composite, std::move(factors), composite_omega,
                             express_rows_in_basis(m.values, composite_omega.indices, tol)};
}

bool is_causally_adjacent(const OmegaSet& composite_omega,
                          std::span<const OmegaSet> factor_omegas) {
  return composite_omega.size() < product_of(factor_omegas).size();
}

CompositeCompression compress_composite(const TheoryBackend& backend,
                                        const CompositeRegion& composite,
                                        std::span<const TomographicLambda> factors,
                                        const CompressionOptions& options) {
  if (factors.size() != composite.size())
    fail(ErrorCode::MissingEntry, "tomographic compression missing for a constituent");
  std::vector<OmegaSet> omegas;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (factors[i].region != composite.constituents()[i])
      fail(ErrorCode::ContextMismatch, "factor compressions out of constituent order");
    omegas.push_back(factors[i].omega);
  }
  ProbTable table = build_prob_table(backend, composite.constituents(), options.table_cap);
  MeasurementMatrix joint = joint_fiducial_matrix(table, omegas);
  const OmegaSet omega = find_composite_omega(joint, options.rank_tol);
  CompositionalLambda lambda =
      compute_compositional_lambda(joint, omega, composite, std::move(omegas), options.residual_tol);
  return CompositeCompression{std::move(table), std::move(joint), std::move(lambda)};
}

AdjacencyGraph adjacency_graph(const TheoryBackend& backend, std::span<const Region> regions,
                               const CompressionOptions& options) {
  AdjacencyGraph graph;
  graph.regions.assign(regions.begin(), regions.end());
  std::vector<TomographicLambda> lambdas;
  for (const auto& r : regions) lambdas.push_back(compress_region(backend, r, options).lambda);
  for (std::size_t i = 0; i < regions.size(); ++i)
    for (std::size_t j = i + 1; j < regions.size(); ++j) {
      const CompositeRegion composite({regions[i], regions[j]});
      std::vector<TomographicLambda> factors;
      for (const auto& c : composite.constituents())
        factors.push_back(c == regions[i] ? lambdas[i] : lambdas[j]);
      const auto result = compress_composite(backend, composite, factors, options);
      const bool adjacent = is_causally_adjacent(result.lambda.omega, result.lambda.factors);
      graph.pairs.push_back({i, j, result.lambda.omega.size(),
                             product_of(result.lambda.factors).size(), adjacent});
      if (adjacent) graph.edges.push_back({i, j});
    }
  return graph;
}

namespace {

// Rows of region `pos` in a two-region table, columns (fiducial label of the
// other region, exterior).
MeasurementMatrix restricted_matrix(const ProbTable& table, std::size_t pos,
                                    const OmegaSet& other_omega) {
  const std::size_t other = 1 - pos;
  const auto n_ext = static_cast<Eigen::Index>(table.exteriors.size());
  MeasurementMatrix m{table.regions[pos],
                      Eigen::MatrixXd(static_cast<Eigen::Index>(table.gammas[pos].size()),
                                      static_cast<Eigen::Index>(other_omega.size()) * n_ext)};
  std::size_t idx[2];
  for (std::size_t a = 0; a < table.gammas[pos].size(); ++a)
    for (std::size_t j = 0; j < other_omega.size(); ++j) {
      idx[pos] = a;
      idx[other] = other_omega.indices[j];
      m.values.block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j) * n_ext, 1, n_ext) =
          table.values.row(static_cast<Eigen::Index>(table.row_index(idx)));
    }
  return m;
}

}  // namespace

OrderSymmetryReport order_symmetry(const ProbTable& table, const CompressionOptions& options) {
  if (table.regions.size() != 2)
    fail(ErrorCode::InvalidArgument, "order symmetry needs a two-region table");
  const Region& r1 = table.regions[0];
  const Region& r2 = table.regions[1];
  const auto n_ext = table.exteriors.size();

  // Path A: R1 first.
  const MeasurementMatrix m1 = build_measurement_matrix(table, r1);
  const OmegaSet omega1_a = find_fiducial_set(m1, options.rank_tol);
  const MeasurementMatrix m2_a = restricted_matrix(table, 1, omega1_a);
  const OmegaSet omega2_a = find_fiducial_set(m2_a, options.rank_tol);
  // Path B: R2 first.
  const MeasurementMatrix m2 = build_measurement_matrix(table, r2);
  const OmegaSet omega2_b = find_fiducial_set(m2, options.rank_tol);
  const MeasurementMatrix m1_b = restricted_matrix(table, 0, omega2_b);
  const OmegaSet omega1_b = find_fiducial_set(m1_b, options.rank_tol);

  OrderSymmetryReport report;
  report.omegas_agree = omega1_a.indices == omega1_b.indices && omega2_a.indices == omega2_b.indices;
  if (!report.omegas_agree) return report;

  const TomographicLambda lambda1 = compute_tomographic_lambda(m1, omega1_a, options.residual_tol);
  const TomographicLambda lambda2 = compute_tomographic_lambda(m2, omega2_a, options.residual_tol);
  const auto k1 = omega1_a.size(), k2 = omega2_a.size();
  const auto g1 = table.gammas[0].size(), g2 = table.gammas[1].size();

  // p_{l1 l2}(e) = r_{l1}(R1) . p_{l2}(R1)  versus  r_{l2}(R2) . p_{l1}(R2).
  Eigen::MatrixXd fiducial(static_cast<Eigen::Index>(k1 * k2), static_cast<Eigen::Index>(n_ext));
  for (std::size_t i = 0; i < k1; ++i)
    for (std::size_t j = 0; j < k2; ++j)
      for (std::size_t e = 0; e < n_ext; ++e) {
        const auto state_r1 = state_vector(m1, omega1_a, omega2_a.indices[j] * n_ext + e);
        const auto state_r2 = state_vector(m2, omega2_a, omega1_a.indices[i] * n_ext + e);
        const double via_r1 = born_rule(r_vector(omega1_a.indices[i], lambda1), state_r1);
        const double via_r2 = born_rule(r_vector(omega2_a.indices[j], lambda2), state_r2);
        report.max_fiducial_difference =
            std::max(report.max_fiducial_difference, std::abs(via_r1 - via_r2));
        fiducial(static_cast<Eigen::Index>(i * k2 + j), static_cast<Eigen::Index>(e)) = via_r1;
      }

  const Eigen::MatrixXd& l1 = lambda1.matrix;
  const Eigen::MatrixXd& l2 = lambda2.matrix;
  for (std::size_t e = 0; e < n_ext; ++e) {
    // X(l1, l2) at this exterior.
    Eigen::MatrixXd x(static_cast<Eigen::Index>(k1), static_cast<Eigen::Index>(k2));
    for (std::size_t i = 0; i < k1; ++i)
      for (std::size_t j = 0; j < k2; ++j)
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            fiducial(static_cast<Eigen::Index>(i * k2 + j), static_cast<Eigen::Index>(e));
    const Eigen::MatrixXd r1_first = ((l1 * x) * l2.transpose()).eval();
    const Eigen::MatrixXd r2_first = (l1 * (x * l2.transpose())).eval();
    for (std::size_t a = 0; a < g1; ++a)
      for (std::size_t b = 0; b < g2; ++b) {
        const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
        const double truth = table.values(static_cast<Eigen::Index>(a * g2 + b),
                                          static_cast<Eigen::Index>(e));
        report.max_reconstruction_difference = std::max(
            report.max_reconstruction_difference, std::abs(r1_first(ia, ib) - r2_first(ia, ib)));
        report.max_table_difference =
            std::max({report.max_table_difference, std::abs(r1_first(ia, ib) - truth),
                      std::abs(r2_first(ia, ib) - truth)});
      }
  }
  return report;
}

}  // namespace causaloid
