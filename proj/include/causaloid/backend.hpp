#pragma once

// Exact probability oracles for chains of finite systems.
//
// A layout is a set of independent wires. Each wire starts at a
// preparation, runs through its locations in causal order and ends at a
// terminal effect. Each location holds a set of actions; an action is an
// instrument whose outcomes are linear maps. Probabilities are evaluated in
// closed form, never sampled.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "causaloid/operational.hpp"
#include "causaloid/rng.hpp"

namespace causaloid {

struct LocalLabel {
  ActionId action = 0;
  OutcomeId outcome = 0;

  auto operator<=>(const LocalLabel&) const = default;
};

struct ActionInfo {
  std::string name;
  std::vector<std::string> outcomes;
};

struct LocationInfo {
  std::string name;
  std::size_t wire = 0;
  std::size_t dim_in = 0;
  std::size_t dim_out = 0;
  std::vector<ActionInfo> actions;
  // Label indices this location ranges over when it is part of the
  // exterior of a table. Defaults to every label.
  std::vector<std::size_t> exterior_labels;

  std::size_t num_labels() const;
};

struct WireInfo {
  std::string name;
  std::size_t dim = 0;
  std::vector<LocationId> locations;  // causal order
  std::vector<std::string> preparations;
  std::vector<std::string> effects;
  // Index of the unit effect (complete readout), if the effect set has one.
  // Tables taken with it hold probabilities rather than sub-normalised weights.
  std::optional<std::size_t> unit_effect;
};

struct WireBoundary {
  std::size_t preparation = 0;
  std::size_t effect = 0;

  auto operator<=>(const WireBoundary&) const = default;
};

class Layout {
 public:
  Layout() = default;
  Layout(std::vector<LocationInfo> locations, std::vector<WireInfo> wires);

  const std::vector<LocationInfo>& locations() const { return locations_; }
  const std::vector<WireInfo>& wires() const { return wires_; }
  const LocationInfo& location(LocationId x) const;
  std::size_t num_locations() const { return locations_.size(); }

  std::optional<LocationId> find(std::string_view name) const;

  // Labels of one location, ordered by action then outcome.
  std::size_t num_labels(LocationId x) const;
  std::size_t label_index(LocationId x, LocalLabel label) const;
  LocalLabel label_at(LocationId x, std::size_t index) const;

  FullPack full_pack() const;

  void set_exterior_labels(LocationId x, std::vector<std::size_t> labels);

 private:
  std::vector<LocationInfo> locations_;
  std::vector<WireInfo> wires_;
  std::vector<std::vector<std::size_t>> label_offsets_;  // per location, per action
};

class TheoryBackend {
 public:
  virtual ~TheoryBackend() = default;

  virtual std::string_view theory() const = 0;

  // r in K(N) = N^r: 1 classical, 2 quantum.
  virtual int tomographic_exponent() const = 0;

  const Layout& layout() const { return layout_; }
  Layout& mutable_layout() { return layout_; }

  // Weight of one wire. `labels` is indexed by LocationId and must carry an
  // entry for every location on the wire.
  virtual double evaluate_wire(std::size_t wire, std::span<const LocalLabel> labels,
                               WireBoundary boundary) const = 0;

  // Product of the wire weights.
  double evaluate(std::span<const LocalLabel> labels,
                  std::span<const WireBoundary> boundary) const;

  // Draws outcomes along a wire with the given action at each of its
  // locations (`actions` indexed by LocationId). Returned outcomes follow
  // the wire's location order.
  virtual std::vector<OutcomeId> sample_wire(std::size_t wire,
                                             std::span<const ActionId> actions,
                                             std::size_t preparation, Rng& rng) const = 0;

  // Copy with every wire's preparation and effect sets doubled by generic
  // members drawn from `seed`.
  virtual std::unique_ptr<TheoryBackend> with_extra_exteriors(std::uint64_t seed) const = 0;

  virtual std::unique_ptr<TheoryBackend> clone() const = 0;

  // N_in^r * N_out^r for location x.
  std::size_t full_operation_dimension(LocationId x) const;

 protected:
  Layout layout_;
};

// Backend whose operations are real matrices acting on real state vectors:
// probability vectors for classical systems, Hermitian-basis coordinates for
// quantum ones.
class LinearChainBackend : public TheoryBackend {
 public:
  double evaluate_wire(std::size_t wire, std::span<const LocalLabel> labels,
                       WireBoundary boundary) const override;
  std::vector<OutcomeId> sample_wire(std::size_t wire, std::span<const ActionId> actions,
                                     std::size_t preparation, Rng& rng) const override;

 protected:
  struct WireData {
    std::vector<Eigen::VectorXd> preparations;
    std::vector<Eigen::VectorXd> effects;
  };
  // Normalisation functional on the output state space of location x.
  const Eigen::VectorXd& unit_functional(LocationId x) const;

  // operations_[x][label] maps the input representation to the output one.
  std::vector<std::vector<Eigen::MatrixXd>> operations_;
  std::vector<Eigen::VectorXd> output_units_;
  std::vector<WireData> wire_data_;
};

// ---------------------------------------------------------------- classical

struct ClassicalAction {
  std::string name;
  std::vector<std::string> outcome_names;
  // transitions[o](out, in) = Prob(outcome o, output symbol out | input in).
  std::vector<Eigen::MatrixXd> transitions;
};

struct ClassicalLocation {
  std::string name;
  std::size_t wire = 0;
  std::vector<ClassicalAction> actions;
  std::vector<std::size_t> exterior_labels;  // empty: all labels
};

struct ClassicalWire {
  std::string name;
  std::size_t dim = 0;
  std::vector<Eigen::VectorXd> preparations;  // distributions over input symbols
  std::vector<std::string> preparation_names;
  std::vector<Eigen::VectorXd> effects;  // response vectors in [0, 1]^dim
  std::vector<std::string> effect_names;
};

struct ClassicalSpec {
  std::vector<ClassicalWire> wires;
  std::vector<ClassicalLocation> locations;  // wire order = order of appearance
};

class QuantumBackend;

class ClassicalBackend : public LinearChainBackend {
 public:
  explicit ClassicalBackend(ClassicalSpec spec);

  std::string_view theory() const override { return "classical"; }
  int tomographic_exponent() const override { return 1; }
  std::unique_ptr<TheoryBackend> with_extra_exteriors(std::uint64_t seed) const override;
  std::unique_ptr<TheoryBackend> clone() const override;

  const ClassicalSpec& spec() const { return spec_; }

  // The same scenario embedded as diagonal (dephased) quantum operations.
  QuantumBackend dephased() const;

 private:
  ClassicalSpec spec_;
};

// ------------------------------------------------------------------ quantum

using CMatrix = Eigen::MatrixXcd;

struct QuantumAction {
  std::string name;
  std::vector<std::string> outcome_names;
  std::vector<std::vector<CMatrix>> kraus;  // outcome -> Kraus operators
};

struct QuantumLocation {
  std::string name;
  std::size_t wire = 0;
  std::vector<QuantumAction> actions;
  std::vector<std::size_t> exterior_labels;  // empty: all labels
};

struct QuantumWire {
  std::string name;
  std::size_t dim = 0;
  std::vector<CMatrix> preparations;  // density operators
  std::vector<std::string> preparation_names;
  std::vector<CMatrix> effects;  // 0 <= E <= 1
  std::vector<std::string> effect_names;
};

struct QuantumSpec {
  std::vector<QuantumWire> wires;
  std::vector<QuantumLocation> locations;
};

class QuantumBackend : public LinearChainBackend {
 public:
  explicit QuantumBackend(QuantumSpec spec);

  std::string_view theory() const override { return "quantum"; }
  int tomographic_exponent() const override { return 2; }
  std::unique_ptr<TheoryBackend> with_extra_exteriors(std::uint64_t seed) const override;
  std::unique_ptr<TheoryBackend> clone() const override;

  const QuantumSpec& spec() const { return spec_; }

 private:
  QuantumSpec spec_;
};

// Orthonormal Hermitian basis of d x d matrices (Hilbert-Schmidt product).
std::vector<CMatrix> hermitian_basis(std::size_t dim);

// Standard informationally complete pure states in dimension d:
// |j>, (|j>+|k>)/sqrt2, (|j>+i|k>)/sqrt2 for j<k. d^2 states in total.
std::vector<Eigen::VectorXcd> informationally_complete_states(std::size_t dim);

// Linear polarisation cos(theta)|0> + sin(theta)|1>.
Eigen::VectorXcd polarisation_state(double angle_deg);

CMatrix projector(const Eigen::VectorXcd& ket);

// Two-outcome Lüders polariser: "pass" projects onto the polarisation at
// `angle_deg`, "absorb" onto the orthogonal one.
QuantumAction polariser(double angle_deg);

// Binary test of |test> followed by re-preparation of |prepare>: outcome 0
// when the test succeeds, outcome 1 otherwise. Output is |prepare> either way.
QuantumAction measure_prepare(const Eigen::VectorXcd& test, const Eigen::VectorXcd& prepare,
                              std::string name);

QuantumAction unitary_action(const CMatrix& u, std::string name);

// Classical read-and-write: outcome reports the input symbol, the output is
// the fixed symbol `write`.
ClassicalAction read_write(std::size_t dim, std::size_t write);

// Passes the symbol through unchanged, reporting it as the outcome.
ClassicalAction read_through(std::size_t dim);

}  // namespace causaloid
