#pragma once

// Backend builders and independent oracles shared by the test binaries.
// The oracles never touch the library's evaluation path: ranks come from an
// SVD, quantum probabilities from explicit density matrices, classical ones
// from direct sums over symbols.

#include <cmath>
#include <complex>
#include <map>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causaloid/backend.hpp"

namespace testing_support {

using namespace causaloid;

inline std::size_t svd_rank(const Eigen::MatrixXd& m, double tol = 1e-9) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double cut = tol * std::max(1.0, s(0));
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return r;
}

inline double deg(double d) { return d * std::numbers::pi / 180.0; }
inline double malus(double delta_deg) { return std::pow(std::cos(deg(delta_deg)), 2); }

// prob(pass at t2 | pass at t1, pass at t3) along a single beam, with the
// absorbed branch leaving the orthogonal polarisation.
inline double malus_chain_conditional(double t1, double t2, double t3) {
  const double pass = malus(t2 - t1) * malus(t3 - t2);
  const double absorb = malus(t2 + 90.0 - t1) * malus(t3 - t2 - 90.0);
  return pass / (pass + absorb);
}

// ------------------------------------------------------------ density oracle

using C2 = Eigen::Matrix2cd;

inline C2 pol_projector(double angle_deg) {
  const double c = std::cos(deg(angle_deg)), s = std::sin(deg(angle_deg));
  C2 p;
  p << c * c, c * s, c * s, s * s;
  return p;
}

inline C2 ket_projector(std::complex<double> a, std::complex<double> b) {
  Eigen::Vector2cd v(a, b);
  v.normalize();
  return v * v.adjoint();
}

// |0>, |1>, |+>, |+i>
inline std::vector<C2> qubit_ic_projectors() {
  const std::complex<double> i(0.0, 1.0);
  return {ket_projector(1, 0), ket_projector(0, 1), ket_projector(1, 1), ket_projector(1, i)};
}

// Polariser at `angle`, outcome 0 pass, 1 absorb.
struct PolStep {
  double angle = 0.0;
  int outcome = 0;
};

inline double density_chain(const C2& rho, const std::vector<PolStep>& steps, const C2& effect) {
  C2 state = rho;
  for (const auto& s : steps) {
    const C2 p = pol_projector(s.outcome == 0 ? s.angle : s.angle + 90.0);
    state = p * state * p;
  }
  return (effect * state).trace().real();
}

// --------------------------------------------------------- classical oracle

// Read-and-write bit/trit: outcome equals the input symbol, output is `write`.
// A chain of such locations with a point input and a point readout.
inline double classical_read_write_chain(std::size_t input, const std::vector<std::size_t>& writes,
                                         const std::vector<std::size_t>& outcomes,
                                         std::size_t readout) {
  std::size_t symbol = input;
  double p = 1.0;
  for (std::size_t i = 0; i < writes.size(); ++i) {
    p *= (outcomes[i] == symbol) ? 1.0 : 0.0;
    symbol = writes[i];
  }
  return p * (symbol == readout ? 1.0 : 0.0);
}

// ---------------------------------------------------------------- builders

inline ProcedureSpec procedure(std::map<LocationId, ActionId> f) { return ProcedureSpec(std::move(f)); }

inline CMatrix to_c(const C2& m) { return CMatrix(m); }

inline QuantumWire qubit_wire_ic(std::string name = "q") {
  QuantumWire w;
  w.name = std::move(name);
  w.dim = 2;
  const auto ic = informationally_complete_states(2);
  for (std::size_t i = 0; i < ic.size(); ++i) {
    w.preparations.push_back(projector(ic[i]));
    w.preparation_names.push_back("ic" + std::to_string(i));
    w.effects.push_back(projector(ic[i]));
    w.effect_names.push_back("ic" + std::to_string(i));
  }
  return w;
}

inline QuantumBackend polariser_chain(std::size_t n, const std::vector<double>& angles) {
  QuantumSpec spec;
  spec.wires.push_back(qubit_wire_ic("beam"));
  for (std::size_t k = 0; k < n; ++k) {
    QuantumLocation loc;
    loc.name = "P" + std::to_string(k + 1);
    for (double a : angles) loc.actions.push_back(polariser(a));
    spec.locations.push_back(std::move(loc));
  }
  return QuantumBackend(std::move(spec));
}

// One polariser on |0> with a complete readout.
inline QuantumBackend single_polariser(double angle) {
  QuantumSpec spec;
  QuantumWire w;
  w.name = "beam";
  w.dim = 2;
  w.preparations = {to_c(ket_projector(1, 0))};
  w.preparation_names = {"h"};
  w.effects = {CMatrix::Identity(2, 2)};
  w.effect_names = {"unit"};
  spec.wires.push_back(w);
  QuantumLocation loc;
  loc.name = "P";
  loc.actions = {polariser(angle)};
  spec.locations.push_back(loc);
  return QuantumBackend(std::move(spec));
}

inline std::vector<QuantumAction> measure_prepare_ic(std::size_t dim) {
  const auto ic = informationally_complete_states(dim);
  std::vector<QuantumAction> out;
  for (std::size_t t = 0; t < ic.size(); ++t)
    for (std::size_t p = 0; p < ic.size(); ++p)
      out.push_back(measure_prepare(ic[t], ic[p], "ic" + std::to_string(t) + ">ic" + std::to_string(p)));
  return out;
}

// `n` measure-prepare locations in sequence on one wire of dimension `dim`.
inline QuantumBackend quantum_channel_chain(std::size_t dim, std::size_t n) {
  QuantumSpec spec;
  QuantumWire w;
  w.name = "q";
  w.dim = dim;
  const auto ic = informationally_complete_states(dim);
  for (std::size_t i = 0; i < ic.size(); ++i) {
    w.preparations.push_back(projector(ic[i]));
    w.preparation_names.push_back("ic" + std::to_string(i));
    w.effects.push_back(projector(ic[i]));
    w.effect_names.push_back("ic" + std::to_string(i));
  }
  spec.wires.push_back(w);
  for (std::size_t k = 0; k < n; ++k) {
    QuantumLocation loc;
    loc.name = "G" + std::to_string(k + 1);
    loc.actions = measure_prepare_ic(dim);
    spec.locations.push_back(std::move(loc));
  }
  return QuantumBackend(std::move(spec));
}

inline ClassicalWire point_wire(std::string name, std::size_t dim) {
  ClassicalWire w;
  w.name = std::move(name);
  w.dim = dim;
  for (std::size_t s = 0; s < dim; ++s) {
    w.preparations.push_back(Eigen::VectorXd::Unit(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(s)));
    w.preparation_names.push_back("point" + std::to_string(s));
    w.effects.push_back(Eigen::VectorXd::Unit(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(s)));
    w.effect_names.push_back("point" + std::to_string(s));
  }
  return w;
}

inline std::vector<ClassicalAction> read_write_all(std::size_t dim) {
  std::vector<ClassicalAction> out;
  for (std::size_t k = 0; k < dim; ++k) out.push_back(read_write(dim, k));
  return out;
}

// `n` read-and-write locations on one wire.
inline ClassicalBackend classical_channel_chain(std::size_t dim, std::size_t n) {
  ClassicalSpec spec;
  spec.wires.push_back(point_wire("c", dim));
  for (std::size_t k = 0; k < n; ++k) {
    ClassicalLocation loc;
    loc.name = "C" + std::to_string(k + 1);
    loc.actions = read_write_all(dim);
    spec.locations.push_back(std::move(loc));
  }
  return ClassicalBackend(std::move(spec));
}

// Two bits on separate wires.
inline ClassicalBackend spacelike_bits() {
  ClassicalSpec spec;
  spec.wires = {point_wire("left", 2), point_wire("right", 2)};
  ClassicalLocation a;
  a.name = "A";
  a.wire = 0;
  a.actions = read_write_all(2);
  ClassicalLocation b;
  b.name = "B";
  b.wire = 1;
  b.actions = read_write_all(2);
  spec.locations = {a, b};
  return ClassicalBackend(std::move(spec));
}

}  // namespace testing_support
