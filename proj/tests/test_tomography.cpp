#include <doctest.h>

#include "causaloid/error.hpp"
#include "causaloid/rng.hpp"
#include "causaloid/tomography.hpp"
#include "support.hpp"

using namespace causaloid;
namespace ts = testing_support;

namespace {

MeasurementMatrix mm(Eigen::MatrixXd v) { return MeasurementMatrix{Region({0}), std::move(v)}; }

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform();
  return m;
}

// Low-rank matrix with a few exact duplicate and zero rows.
Eigen::MatrixXd structured(Rng& rng, Eigen::Index rows, Eigen::Index rank, Eigen::Index cols) {
  Eigen::MatrixXd m = random_matrix(rng, rows, rank) * random_matrix(rng, rank, cols);
  m.row(rows / 2) = m.row(0);
  m.row(rows - 1).setZero();
  return m;
}

// Greedy reference built on SVD ranks: a row joins iff it raises the rank.
std::vector<std::size_t> greedy_by_rank(const Eigen::MatrixXd& m) {
  std::vector<std::size_t> chosen;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(chosen.size() + 1), m.cols());
    for (std::size_t k = 0; k < chosen.size(); ++k) sub.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(chosen[k]));
    sub.row(sub.rows() - 1) = m.row(i);
    const std::size_t r = ts::svd_rank(sub);
    if (r > rank) {
      rank = r;
      chosen.push_back(static_cast<std::size_t>(i));
    }
  }
  return chosen;
}

double max_reconstruction_error(const RegionCompression& rc) {
  double worst = 0.0;
  for (std::size_t e = 0; e < rc.matrix.cols(); ++e) {
    const auto p = state_vector(rc.matrix, rc.lambda.omega, e);
    for (std::size_t a = 0; a < rc.matrix.rows(); ++a)
      worst = std::max(worst, std::abs(born_rule(r_vector(a, rc.lambda), p) -
                                       rc.matrix.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(e))));
  }
  return worst;
}

double delta_defect(const TomographicLambda& l) {
  double worst = 0.0;
  for (std::size_t j = 0; j < l.omega.size(); ++j)
    for (Eigen::Index k = 0; k < l.matrix.cols(); ++k)
      worst = std::max(worst, std::abs(l.matrix(static_cast<Eigen::Index>(l.omega.indices[j]), k) -
                                       (static_cast<Eigen::Index>(j) == k ? 1.0 : 0.0)));
  return worst;
}

}  // namespace

TEST_CASE("fiducial selection on constructed matrices") {
  CHECK(find_fiducial_set(mm(Eigen::MatrixXd::Identity(3, 3))).indices == std::vector<std::size_t>{0, 1, 2});

  Eigen::MatrixXd m(3, 4);
  m << 0.1, 0.2, 0.3, 0.4, 0.5, 0.1, 0.0, 0.2, 0, 0, 0, 0;
  m.row(2) = m.row(0) + m.row(1);
  CHECK(find_fiducial_set(mm(m)).indices == std::vector<std::size_t>{0, 1});

  CHECK_THROWS_AS(find_fiducial_set(mm(Eigen::MatrixXd(0, 0))), Error);
}

TEST_CASE("Lambda on constructed dependences") {
  Eigen::MatrixXd m(4, 5);
  m.row(0) << 0.2, 0.4, 0.1, 0.0, 0.3;
  m.row(1) << 0.5, 0.1, 0.1, 0.6, 0.2;
  m.row(2) = 0.5 * m.row(0) + 0.5 * m.row(1);
  m.row(3) << 0.0, 0.3, 0.9, 0.1, 0.1;
  const auto M = mm(m);
  const auto omega = find_fiducial_set(M);
  REQUIRE(omega.indices == std::vector<std::size_t>{0, 1, 3});
  const auto lambda = compute_tomographic_lambda(M, omega);
  CHECK(lambda.matrix.rows() == 4);
  CHECK(lambda.matrix.cols() == 3);
  CHECK(lambda.matrix(2, 0) == doctest::Approx(0.5));
  CHECK(lambda.matrix(2, 1) == doctest::Approx(0.5));
  CHECK(std::abs(lambda.matrix(2, 2)) < 1e-12);
  CHECK(delta_defect(lambda) == 0.0);

  const auto r = r_vector(2, lambda);
  CHECK(r.components(0) == doctest::Approx(0.5));
  CHECK(r.components(1) == doctest::Approx(0.5));
  const auto fid = r_vector(3, lambda);
  CHECK(fid.components == Eigen::Vector3d(0, 0, 1));
  CHECK_THROWS_AS(r_vector(4, lambda), Error);

  // a Gamma row outside the fiducial span
  OmegaSet short_omega{Region({0}), {0, 1}, 4};
  try {
    compute_tomographic_lambda(M, short_omega);
    FAIL("expected ResidualTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ResidualTooLarge);
  }
}

TEST_CASE("state vectors and the Born rule") {
  const auto bit = ts::classical_channel_chain(2, 1);
  const auto rc = compress_region(bit, Region({0}));
  for (std::size_t e = 0; e < rc.matrix.cols(); ++e) {
    const auto p = state_vector(rc.matrix, rc.lambda.omega, e);
    CHECK(static_cast<std::size_t>(p.components.size()) == rc.lambda.omega.size());
    for (std::size_t j = 0; j < rc.lambda.omega.size(); ++j) {
      // fiducial r-vectors pick out the state components
      CHECK(born_rule(r_vector(rc.lambda.omega.indices[j], rc.lambda), p) == p.components(static_cast<Eigen::Index>(j)));
    }
  }
  // exterior 0 is point input 0 read out as 0: deterministic entries
  const auto p0 = state_vector(rc.matrix, rc.lambda.omega, 0);
  for (std::size_t a = 0; a < rc.gamma.size(); ++a) {
    const auto& l = rc.gamma.labels[a];
    const double expected = ts::classical_read_write_chain(0, {l.actions[0]}, {l.outcomes[0]}, 0);
    CHECK(born_rule(r_vector(a, rc.lambda), p0) == doctest::Approx(expected));
  }

  StateVector zero{rc.lambda.omega, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rc.lambda.omega.size()))};
  CHECK(born_rule(r_vector(1, rc.lambda), zero) == 0.0);

  Eigen::MatrixXd twin(2, 2);
  twin << 0.3, 0.3, 0.6, 0.6;
  const auto t = mm(twin);
  const auto o = find_fiducial_set(t);
  CHECK(state_vector(t, o, 0).components == state_vector(t, o, 1).components);
  CHECK_THROWS_AS(state_vector(t, o, 2), Error);

  OmegaSet other = rc.lambda.omega;
  other.region = Region({5});
  StateVector foreign{other, zero.components};
  try {
    born_rule(r_vector(0, rc.lambda), foreign);
    FAIL("expected ContextMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ContextMismatch);
  }

  const auto shown = report_probability(1.0 + 1e-6);
  CHECK(shown.shown == 1.0);
  CHECK(shown.out_of_range);
  CHECK_FALSE(report_probability(-1e-12).out_of_range);
}

TEST_CASE("measurement matrix reshapes the table") {
  ClassicalSpec spec;
  auto w = ts::point_wire("c", 2);
  w.effects = {Eigen::VectorXd::Ones(2)};
  w.effect_names = {"unit"};
  spec.wires.push_back(w);
  ClassicalLocation loc;
  loc.name = "R";
  loc.actions = {read_through(2)};
  spec.locations.push_back(loc);
  const ClassicalBackend b(spec);
  const Region r({0});
  const std::vector<Region> rs{r};
  const auto table = build_prob_table(b, rs);
  const auto m = build_measurement_matrix(table, r);
  CHECK(m.values == table.values);
  CHECK(m.values == Eigen::Matrix2d::Identity());
}

TEST_CASE("tomography counts agree with the SVD rank and the N^r law") {
  struct Case {
    std::unique_ptr<TheoryBackend> backend;
    std::size_t n;
    int r;
  };
  std::vector<Case> cases;
  cases.push_back({ts::classical_channel_chain(2, 1).clone(), 2, 1});
  cases.push_back({ts::classical_channel_chain(3, 1).clone(), 3, 1});
  cases.push_back({ts::quantum_channel_chain(2, 1).clone(), 2, 2});
  cases.push_back({ts::quantum_channel_chain(3, 1).clone(), 3, 2});
  for (const auto& c : cases) {
    const auto rc = compress_region(*c.backend, Region({0}));
    const auto k = static_cast<std::size_t>(std::pow(c.n, c.r));
    CHECK(rc.lambda.omega.size() == k * k);
    CHECK(rc.lambda.omega.size() == ts::svd_rank(rc.matrix.values));
    CHECK(rc.lambda.omega.size() == c.backend->full_operation_dimension(0));
  }
}

TEST_CASE("qubit Lambda over a 64-label IC action set") {
  QuantumSpec spec;
  spec.wires.push_back(ts::qubit_wire_ic("q"));
  QuantumLocation loc;
  loc.name = "G";
  for (double a : {0.0, 30.0, 60.0, 90.0}) loc.actions.push_back(polariser(a));
  for (auto& a : ts::measure_prepare_ic(2)) loc.actions.push_back(std::move(a));
  const auto ic = informationally_complete_states(2);
  for (std::size_t t = 0; t < ic.size(); ++t)
    for (double a : {0.0, 30.0, 60.0})
      loc.actions.push_back(measure_prepare(ic[t], polarisation_state(a), "x" + std::to_string(t)));
  spec.locations.push_back(loc);
  const QuantumBackend b(spec);
  const auto rc = compress_region(b, Region({0}));
  REQUIRE(rc.lambda.matrix.rows() == 64);
  REQUIRE(rc.lambda.matrix.cols() == 16);
  Eigen::MatrixXd fid(16, rc.matrix.values.cols());
  for (Eigen::Index j = 0; j < 16; ++j)
    fid.row(j) = rc.matrix.values.row(static_cast<Eigen::Index>(rc.lambda.omega.indices[static_cast<std::size_t>(j)]));
  const Eigen::MatrixXd residual = rc.matrix.values - rc.lambda.matrix * fid;
  for (Eigen::Index i = 0; i < 64; ++i)
    CHECK(residual.row(i).norm() <= 1e-9 * std::max(1.0, rc.matrix.values.row(i).norm()));
  CHECK(delta_defect(rc.lambda) == 0.0);
}

TEST_CASE("property: scan order does not change |Omega|") {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const auto rows = static_cast<Eigen::Index>(4 + rng.next() % 12);
    const auto rank = static_cast<Eigen::Index>(1 + rng.next() % 5);
    const auto m = mm(structured(rng, rows, rank, 9));
    const auto fwd = find_fiducial_set(m, 1e-9, ScanOrder::Forward);
    const auto rev = find_fiducial_set(m, 1e-9, ScanOrder::Reverse);
    CHECK(fwd.size() == rev.size());
    CHECK(fwd.size() == ts::svd_rank(m.values));
    CHECK(fwd.indices == greedy_by_rank(m.values));
  }
  for (const auto& b : {ts::quantum_channel_chain(2, 1).clone(), ts::polariser_chain(1, {0, 30, 60, 90}).clone(),
                        ts::classical_channel_chain(3, 1).clone()}) {
    const auto rc = compress_region(*b, Region({0}));
    CHECK(find_fiducial_set(rc.matrix, 1e-9, ScanOrder::Reverse).size() == rc.lambda.omega.size());
  }
}

TEST_CASE("property: reconstruction and delta rows on oracle tables") {
  std::vector<std::unique_ptr<TheoryBackend>> backends;
  backends.push_back(ts::classical_channel_chain(2, 2).clone());
  backends.push_back(ts::classical_channel_chain(3, 1).clone());
  backends.push_back(ts::quantum_channel_chain(2, 2).clone());
  backends.push_back(ts::polariser_chain(3, {0, 30, 60, 90}).clone());
  backends.push_back(ts::spacelike_bits().clone());
  for (const auto& b : backends)
    for (LocationId x = 0; x < b->layout().num_locations(); ++x) {
      const auto rc = compress_region(*b, Region({x}));
      CHECK(max_reconstruction_error(rc) <= 1e-8);
      CHECK(delta_defect(rc.lambda) <= 1e-9);
      for (std::size_t e = 0; e < rc.matrix.cols(); ++e) {
        const auto p = state_vector(rc.matrix, rc.lambda.omega, e);
        CHECK(p.components.minCoeff() >= -1e-10);
        CHECK(p.components.maxCoeff() <= 1.0 + 1e-10);
      }
    }
}

TEST_CASE("degenerate fallback: no compression means Omega = Gamma and Lambda = identity") {
  Rng rng(5);
  const auto m = mm(random_matrix(rng, 5, 8));
  const auto omega = find_fiducial_set(m);
  CHECK(omega.size() == 5);
  const auto lambda = compute_tomographic_lambda(m, omega);
  CHECK(lambda.matrix == Eigen::MatrixXd::Identity(5, 5));
}
