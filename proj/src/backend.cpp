#include "causaloid/backend.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>

#include "causaloid/error.hpp"

namespace causaloid {

namespace {

constexpr std::size_t kMaxDim = 8;
constexpr double kStateTol = 1e-12;
constexpr double kInstrumentTol = 1e-10;
constexpr double kClassicalRowTol = 1e-12;

std::string where(const std::string& location, const std::string& action) {
  return "location '" + location + "', action '" + action + "'";
}

}  // namespace

std::size_t LocationInfo::num_labels() const {
  std::size_t n = 0;
  for (const auto& a : actions) n += a.outcomes.size();
  return n;
}

Layout::Layout(std::vector<LocationInfo> locations, std::vector<WireInfo> wires)
    : locations_(std::move(locations)), wires_(std::move(wires)) {
  label_offsets_.resize(locations_.size());
  for (std::size_t x = 0; x < locations_.size(); ++x) {
    std::size_t offset = 0;
    for (const auto& a : locations_[x].actions) {
      label_offsets_[x].push_back(offset);
      offset += a.outcomes.size();
    }
    if (locations_[x].exterior_labels.empty()) {
      locations_[x].exterior_labels.resize(offset);
      for (std::size_t i = 0; i < offset; ++i) locations_[x].exterior_labels[i] = i;
    }
  }
}

const LocationInfo& Layout::location(LocationId x) const {
  if (x >= locations_.size())
    fail(ErrorCode::UnknownRegion, "location " + std::to_string(x) + " is not in the layout");
  return locations_[x];
}

std::optional<LocationId> Layout::find(std::string_view name) const {
  for (std::size_t x = 0; x < locations_.size(); ++x)
    if (locations_[x].name == name) return static_cast<LocationId>(x);
  return std::nullopt;
}

std::size_t Layout::num_labels(LocationId x) const { return location(x).num_labels(); }

std::size_t Layout::label_index(LocationId x, LocalLabel label) const {
  const auto& loc = location(x);
  if (label.action >= loc.actions.size() ||
      label.outcome >= loc.actions[label.action].outcomes.size())
    fail(ErrorCode::UnknownLabel, "no label (" + std::to_string(label.action) + "," +
                                      std::to_string(label.outcome) + ") at '" + loc.name + "'");
  return label_offsets_[x][label.action] + label.outcome;
}

LocalLabel Layout::label_at(LocationId x, std::size_t index) const {
  const auto& loc = location(x);
  const auto& offsets = label_offsets_[x];
  for (std::size_t a = offsets.size(); a-- > 0;) {
    if (index >= offsets[a]) {
      const std::size_t o = index - offsets[a];
      if (o >= loc.actions[a].outcomes.size()) break;
      return {static_cast<ActionId>(a), static_cast<OutcomeId>(o)};
    }
  }
  fail(ErrorCode::UnknownLabel,
       "label index " + std::to_string(index) + " out of range at '" + loc.name + "'");
}

FullPack Layout::full_pack() const {
  FullPack pack;
  for (std::size_t x = 0; x < locations_.size(); ++x) {
    const auto id = static_cast<LocationId>(x);
    pack.locations.push_back(id);
    pack.actions_per_location[id] = locations_[x].actions.size();
    auto& outs = pack.outcomes_per_location[id];
    for (const auto& a : locations_[x].actions) outs.push_back(a.outcomes.size());
  }
  return pack;
}

void Layout::set_exterior_labels(LocationId x, std::vector<std::size_t> labels) {
  const std::size_t n = num_labels(x);
  for (std::size_t l : labels)
    if (l >= n) fail(ErrorCode::UnknownLabel, "exterior label out of range");
  if (labels.empty()) fail(ErrorCode::InvalidArgument, "exterior label set must be non-empty");
  locations_[x].exterior_labels = std::move(labels);
}

double TheoryBackend::evaluate(std::span<const LocalLabel> labels,
                               std::span<const WireBoundary> boundary) const {
  if (boundary.size() != layout_.wires().size())
    fail(ErrorCode::InvalidArgument, "one boundary per wire expected");
  double p = 1.0;
  for (std::size_t w = 0; w < boundary.size(); ++w) p *= evaluate_wire(w, labels, boundary[w]);
  return p;
}

std::size_t TheoryBackend::full_operation_dimension(LocationId x) const {
  const auto& loc = layout_.location(x);
  std::size_t n = 1;
  for (int i = 0; i < tomographic_exponent(); ++i) n *= loc.dim_in * loc.dim_out;
  return n;
}

// ------------------------------------------------------------ linear chain

double LinearChainBackend::evaluate_wire(std::size_t wire, std::span<const LocalLabel> labels,
                                         WireBoundary boundary) const {
  const auto& data = wire_data_.at(wire);
  if (boundary.preparation >= data.preparations.size() || boundary.effect >= data.effects.size())
    fail(ErrorCode::UnknownExterior, "boundary index out of range on wire " + std::to_string(wire));
  thread_local Eigen::VectorXd state, next;
  state = data.preparations[boundary.preparation];
  for (LocationId x : layout_.wires()[wire].locations) {
    if (x >= labels.size()) fail(ErrorCode::InvalidArgument, "missing label for a location");
    const auto& op = operations_[x][layout_.label_index(x, labels[x])];
    next.noalias() = op * state;
    state.swap(next);
  }
  return data.effects[boundary.effect].dot(state);
}

std::vector<OutcomeId> LinearChainBackend::sample_wire(std::size_t wire,
                                                       std::span<const ActionId> actions,
                                                       std::size_t preparation, Rng& rng) const {
  const auto& data = wire_data_.at(wire);
  if (preparation >= data.preparations.size())
    fail(ErrorCode::UnknownExterior, "preparation index out of range");
  Eigen::VectorXd state = data.preparations[preparation];
  std::vector<OutcomeId> outcomes;
  for (LocationId x : layout_.wires()[wire].locations) {
    const auto& loc = layout_.location(x);
    const ActionId a = actions[x];
    if (a >= loc.actions.size()) fail(ErrorCode::UnknownProcedure, "action out of range");
    const std::size_t n = loc.actions[a].outcomes.size();
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t chosen = n - 1;
    std::vector<Eigen::VectorXd> branches(n);
    std::vector<double> weights(n);
    double total = 0.0;
    for (std::size_t o = 0; o < n; ++o) {
      branches[o] = operations_[x][layout_.label_index(x, {a, static_cast<OutcomeId>(o)})] * state;
      weights[o] = std::max(0.0, unit_functional(x).dot(branches[o]));
      total += weights[o];
    }
    if (!(total > 0.0)) fail(ErrorCode::BackendError, "zero-weight branch during sampling");
    for (std::size_t o = 0; o < n; ++o) {
      cumulative += weights[o] / total;
      if (u < cumulative) {
        chosen = o;
        break;
      }
    }
    state = branches[chosen] / weights[chosen];
    outcomes.push_back(static_cast<OutcomeId>(chosen));
  }
  return outcomes;
}

const Eigen::VectorXd& LinearChainBackend::unit_functional(LocationId x) const {
  return output_units_.at(x);
}

// --------------------------------------------------------------- classical

ClassicalAction read_write(std::size_t dim, std::size_t write) {
  ClassicalAction action;
  action.name = "write" + std::to_string(write);
  for (std::size_t o = 0; o < dim; ++o) {
    action.outcome_names.push_back(std::to_string(o));
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
    t(write, o) = 1.0;
    action.transitions.push_back(t);
  }
  return action;
}

ClassicalAction read_through(std::size_t dim) {
  ClassicalAction action;
  action.name = "read";
  for (std::size_t o = 0; o < dim; ++o) {
    action.outcome_names.push_back(std::to_string(o));
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
    t(o, o) = 1.0;
    action.transitions.push_back(t);
  }
  return action;
}

ClassicalBackend::ClassicalBackend(ClassicalSpec spec) : spec_(std::move(spec)) {
  std::vector<WireInfo> wires;
  for (const auto& w : spec_.wires) {
    if (w.dim == 0 || w.dim > kMaxDim)
      fail(ErrorCode::BackendError, "wire '" + w.name + "' dimension must be in 1..8");
    WireInfo info{w.name, w.dim, {}, w.preparation_names, w.effect_names, std::nullopt};
    if (info.preparations.size() != w.preparations.size() ||
        info.effects.size() != w.effects.size())
      fail(ErrorCode::BackendError, "wire '" + w.name + "' boundary names/values mismatch");
    if (w.preparations.empty() || w.effects.empty())
      fail(ErrorCode::BackendError, "wire '" + w.name + "' needs preparations and effects");
    for (const auto& p : w.preparations) {
      if (static_cast<std::size_t>(p.size()) != w.dim)
        fail(ErrorCode::DimensionMismatch, "preparation size differs from wire dimension");
      if (p.minCoeff() < -kStateTol || std::abs(p.sum() - 1.0) > kStateTol)
        fail(ErrorCode::BackendError, "preparation on '" + w.name + "' is not a distribution");
    }
    wires.push_back(std::move(info));
  }

  std::vector<LocationInfo> locations;
  std::vector<std::size_t> current_dim;
  for (const auto& w : spec_.wires) current_dim.push_back(w.dim);
  operations_.resize(spec_.locations.size());
  output_units_.resize(spec_.locations.size());
  for (std::size_t x = 0; x < spec_.locations.size(); ++x) {
    const auto& loc = spec_.locations[x];
    if (loc.wire >= wires.size())
      fail(ErrorCode::BackendError, "location '" + loc.name + "' references an unknown wire");
    if (loc.actions.empty())
      fail(ErrorCode::BackendError, "location '" + loc.name + "' has no actions");
    LocationInfo info;
    info.name = loc.name;
    info.wire = loc.wire;
    info.dim_in = current_dim[loc.wire];
    info.exterior_labels = loc.exterior_labels;
    std::optional<std::size_t> dim_out;
    for (const auto& action : loc.actions) {
      if (action.transitions.empty() || action.transitions.size() != action.outcome_names.size())
        fail(ErrorCode::BackendError, "bad outcome list at " + where(loc.name, action.name));
      Eigen::MatrixXd total;
      for (const auto& t : action.transitions) {
        if (static_cast<std::size_t>(t.cols()) != info.dim_in)
          fail(ErrorCode::DimensionMismatch,
               "transition input size differs from wire at " + where(loc.name, action.name));
        if (dim_out && static_cast<std::size_t>(t.rows()) != *dim_out)
          fail(ErrorCode::DimensionMismatch, "inconsistent output size at " + loc.name);
        dim_out = static_cast<std::size_t>(t.rows());
        if (t.minCoeff() < -kClassicalRowTol)
          fail(ErrorCode::BackendError, "negative transition at " + where(loc.name, action.name));
        total = total.size() ? Eigen::MatrixXd(total + t) : t;
        operations_[x].push_back(t);
      }
      const Eigen::RowVectorXd column_sums = total.colwise().sum();
      for (Eigen::Index i = 0; i < column_sums.size(); ++i)
        if (std::abs(column_sums(i) - 1.0) > kClassicalRowTol)
          fail(ErrorCode::BackendError,
               "instrument is not normalised at " + where(loc.name, action.name));
      info.actions.push_back({action.name, action.outcome_names});
    }
    info.dim_out = *dim_out;
    if (info.dim_out == 0 || info.dim_out > kMaxDim)
      fail(ErrorCode::BackendError, "dimension out of range at " + loc.name);
    output_units_[x] = Eigen::VectorXd::Ones(info.dim_out);
    current_dim[loc.wire] = info.dim_out;
    wires[loc.wire].locations.push_back(static_cast<LocationId>(x));
    locations.push_back(std::move(info));
  }

  for (std::size_t w = 0; w < spec_.wires.size(); ++w) {
    WireData data;
    data.preparations = spec_.wires[w].preparations;
    for (const auto& e : spec_.wires[w].effects) {
      if (static_cast<std::size_t>(e.size()) != current_dim[w])
        fail(ErrorCode::DimensionMismatch,
             "effect size differs from the final dimension of wire '" + spec_.wires[w].name + "'");
      if (e.minCoeff() < -kStateTol || e.maxCoeff() > 1.0 + kStateTol)
        fail(ErrorCode::BackendError, "effect entries must lie in [0,1]");
      if (!wires[w].unit_effect && (e.array() - 1.0).abs().maxCoeff() <= kStateTol)
        wires[w].unit_effect = data.effects.size();
      data.effects.push_back(e);
    }
    wire_data_.push_back(std::move(data));
  }
  layout_ = Layout(std::move(locations), std::move(wires));
}

std::unique_ptr<TheoryBackend> ClassicalBackend::with_extra_exteriors(std::uint64_t seed) const {
  ClassicalSpec extended = spec_;
  Rng rng(seed);
  for (std::size_t w = 0; w < extended.wires.size(); ++w) {
    auto& wire = extended.wires[w];
    const std::size_t n_prep = wire.preparations.size();
    for (std::size_t i = 0; i < n_prep; ++i) {
      Eigen::VectorXd p(wire.dim);
      for (std::size_t k = 0; k < wire.dim; ++k) p(k) = -std::log(1.0 - rng.uniform());
      wire.preparations.push_back(p / p.sum());
      wire.preparation_names.push_back("extra-" + std::to_string(i));
    }
    const std::size_t out_dim = static_cast<std::size_t>(wire.effects.front().size());
    const std::size_t n_eff = wire.effects.size();
    for (std::size_t i = 0; i < n_eff; ++i) {
      Eigen::VectorXd e(out_dim);
      for (std::size_t k = 0; k < out_dim; ++k) e(k) = rng.uniform();
      wire.effects.push_back(e);
      wire.effect_names.push_back("extra-" + std::to_string(i));
    }
  }
  auto out = std::make_unique<ClassicalBackend>(std::move(extended));
  for (std::size_t x = 0; x < layout_.num_locations(); ++x)
    out->mutable_layout().set_exterior_labels(static_cast<LocationId>(x),
                                              layout_.locations()[x].exterior_labels);
  return out;
}

std::unique_ptr<TheoryBackend> ClassicalBackend::clone() const {
  return std::make_unique<ClassicalBackend>(*this);
}

QuantumBackend ClassicalBackend::dephased() const {
  QuantumSpec q;
  auto diag = [](const Eigen::VectorXd& v) {
    CMatrix m = CMatrix::Zero(v.size(), v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) m(i, i) = v(i);
    return m;
  };
  for (const auto& w : spec_.wires) {
    QuantumWire qw{w.name, w.dim, {}, w.preparation_names, {}, w.effect_names};
    for (const auto& p : w.preparations) qw.preparations.push_back(diag(p));
    for (const auto& e : w.effects) qw.effects.push_back(diag(e));
    q.wires.push_back(std::move(qw));
  }
  for (const auto& loc : spec_.locations) {
    QuantumLocation ql{loc.name, loc.wire, {}, loc.exterior_labels};
    for (const auto& action : loc.actions) {
      QuantumAction qa{action.name, action.outcome_names, {}};
      for (const auto& t : action.transitions) {
        std::vector<CMatrix> kraus;
        for (Eigen::Index out = 0; out < t.rows(); ++out)
          for (Eigen::Index in = 0; in < t.cols(); ++in) {
            if (t(out, in) <= 0.0) continue;
            CMatrix k = CMatrix::Zero(t.rows(), t.cols());
            k(out, in) = std::sqrt(t(out, in));
            kraus.push_back(k);
          }
        if (kraus.empty()) kraus.push_back(CMatrix::Zero(t.rows(), t.cols()));
        qa.kraus.push_back(std::move(kraus));
      }
      ql.actions.push_back(std::move(qa));
    }
    q.locations.push_back(std::move(ql));
  }
  return QuantumBackend(std::move(q));
}

// ----------------------------------------------------------------- quantum

std::vector<CMatrix> hermitian_basis(std::size_t dim) {
  std::vector<CMatrix> basis;
  const double s = 1.0 / std::numbers::sqrt2;
  const std::complex<double> i(0.0, 1.0);
  for (std::size_t j = 0; j < dim; ++j)
    for (std::size_t k = 0; k < dim; ++k) {
      CMatrix b = CMatrix::Zero(dim, dim);
      if (j == k) {
        b(j, j) = 1.0;
      } else if (j < k) {
        b(j, k) = s;
        b(k, j) = s;
      } else {
        b(k, j) = i * s;
        b(j, k) = -i * s;
      }
      basis.push_back(b);
    }
  return basis;
}

std::vector<Eigen::VectorXcd> informationally_complete_states(std::size_t dim) {
  std::vector<Eigen::VectorXcd> states;
  for (std::size_t j = 0; j < dim; ++j) states.push_back(Eigen::VectorXcd::Unit(dim, j));
  const double s = 1.0 / std::numbers::sqrt2;
  const std::complex<double> i(0.0, 1.0);
  for (std::size_t j = 0; j < dim; ++j)
    for (std::size_t k = j + 1; k < dim; ++k) {
      Eigen::VectorXcd plus = Eigen::VectorXcd::Zero(dim);
      plus(j) = s;
      plus(k) = s;
      states.push_back(plus);
      Eigen::VectorXcd plus_i = Eigen::VectorXcd::Zero(dim);
      plus_i(j) = s;
      plus_i(k) = i * s;
      states.push_back(plus_i);
    }
  return states;
}

Eigen::VectorXcd polarisation_state(double angle_deg) {
  const double t = angle_deg * std::numbers::pi / 180.0;
  Eigen::VectorXcd v(2);
  v << std::cos(t), std::sin(t);
  return v;
}

CMatrix projector(const Eigen::VectorXcd& ket) { return ket * ket.adjoint(); }

QuantumAction polariser(double angle_deg) {
  QuantumAction action;
  char name[48];
  std::snprintf(name, sizeof name, "pol%g", angle_deg);
  action.name = name;
  action.outcome_names = {"pass", "absorb"};
  action.kraus = {{projector(polarisation_state(angle_deg))},
                  {projector(polarisation_state(angle_deg + 90.0))}};
  return action;
}

QuantumAction measure_prepare(const Eigen::VectorXcd& test, const Eigen::VectorXcd& prepare,
                              std::string name) {
  const Eigen::Index d_in = test.size();
  const Eigen::VectorXcd t = test.normalized();
  const Eigen::VectorXcd p = prepare.normalized();
  // Orthonormal basis of the complement of |t>.
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(CMatrix::Identity(d_in, d_in) - projector(t));
  std::vector<CMatrix> reject;
  for (Eigen::Index k = 0; k < d_in; ++k)
    if (eig.eigenvalues()(k) > 0.5) reject.push_back(p * eig.eigenvectors().col(k).adjoint());
  if (reject.empty()) reject.push_back(CMatrix::Zero(p.size(), d_in));
  QuantumAction action;
  action.name = std::move(name);
  action.outcome_names = {"accept", "reject"};
  action.kraus = {{p * t.adjoint()}, std::move(reject)};
  return action;
}

QuantumAction unitary_action(const CMatrix& u, std::string name) {
  return QuantumAction{std::move(name), {"done"}, {{u}}};
}

namespace {

void check_hermitian_bounded(const CMatrix& m, double lo, double hi, const std::string& what) {
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kStateTol)
    fail(ErrorCode::BackendError, what + " is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(m);
  if (eig.eigenvalues().minCoeff() < lo - kStateTol ||
      eig.eigenvalues().maxCoeff() > hi + kStateTol)
    fail(ErrorCode::BackendError, what + " has eigenvalues outside the allowed range");
}

Eigen::VectorXd coordinates(const CMatrix& m, const std::vector<CMatrix>& basis) {
  Eigen::VectorXd v(basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k) v(k) = (basis[k] * m).trace().real();
  return v;
}

// Real matrix of X -> sum_k K X K^dagger in Hermitian-basis coordinates.
// Keeping only the real part projects out any anti-Hermitian drift.
Eigen::MatrixXd superoperator(const std::vector<CMatrix>& kraus, const std::vector<CMatrix>& in,
                              const std::vector<CMatrix>& out) {
  Eigen::MatrixXd s(out.size(), in.size());
  for (std::size_t l = 0; l < in.size(); ++l) {
    CMatrix image = CMatrix::Zero(kraus.front().rows(), kraus.front().rows());
    for (const auto& k : kraus) image += k * in[l] * k.adjoint();
    image = 0.5 * (image + image.adjoint()).eval();
    s.col(l) = coordinates(image, out);
  }
  return s;
}

}  // namespace

QuantumBackend::QuantumBackend(QuantumSpec spec) : spec_(std::move(spec)) {
  std::vector<WireInfo> wires;
  std::vector<std::size_t> current_dim;
  for (const auto& w : spec_.wires) {
    if (w.dim == 0 || w.dim > kMaxDim)
      fail(ErrorCode::BackendError, "wire '" + w.name + "' dimension must be in 1..8");
    if (w.preparations.empty() || w.effects.empty())
      fail(ErrorCode::BackendError, "wire '" + w.name + "' needs preparations and effects");
    if (w.preparation_names.size() != w.preparations.size() ||
        w.effect_names.size() != w.effects.size())
      fail(ErrorCode::BackendError, "wire '" + w.name + "' boundary names/values mismatch");
    for (const auto& rho : w.preparations) {
      if (static_cast<std::size_t>(rho.rows()) != w.dim || rho.rows() != rho.cols())
        fail(ErrorCode::DimensionMismatch, "preparation shape differs from wire '" + w.name + "'");
      check_hermitian_bounded(rho, 0.0, 1.0, "preparation on '" + w.name + "'");
      if (std::abs(rho.trace().real() - 1.0) > kStateTol)
        fail(ErrorCode::BackendError, "preparation on '" + w.name + "' must have unit trace");
    }
    wires.push_back(WireInfo{w.name, w.dim, {}, w.preparation_names, w.effect_names, std::nullopt});
    current_dim.push_back(w.dim);
  }

  std::vector<LocationInfo> locations;
  operations_.resize(spec_.locations.size());
  output_units_.resize(spec_.locations.size());
  for (std::size_t x = 0; x < spec_.locations.size(); ++x) {
    const auto& loc = spec_.locations[x];
    if (loc.wire >= wires.size())
      fail(ErrorCode::BackendError, "location '" + loc.name + "' references an unknown wire");
    if (loc.actions.empty())
      fail(ErrorCode::BackendError, "location '" + loc.name + "' has no actions");
    LocationInfo info;
    info.name = loc.name;
    info.wire = loc.wire;
    info.dim_in = current_dim[loc.wire];
    info.exterior_labels = loc.exterior_labels;
    std::optional<std::size_t> dim_out;
    for (const auto& action : loc.actions) {
      if (action.kraus.empty() || action.kraus.size() != action.outcome_names.size())
        fail(ErrorCode::BackendError, "bad outcome list at " + where(loc.name, action.name));
      for (const auto& outcome : action.kraus) {
        if (outcome.empty())
          fail(ErrorCode::BackendError, "outcome without Kraus operators at " + loc.name);
        for (const auto& k : outcome) {
          if (static_cast<std::size_t>(k.cols()) != info.dim_in)
            fail(ErrorCode::DimensionMismatch,
                 "Kraus input size differs from wire at " + where(loc.name, action.name));
          if (dim_out && static_cast<std::size_t>(k.rows()) != *dim_out)
            fail(ErrorCode::DimensionMismatch, "inconsistent output size at " + loc.name);
          dim_out = static_cast<std::size_t>(k.rows());
        }
      }
    }
    if (*dim_out == 0 || *dim_out > kMaxDim)
      fail(ErrorCode::BackendError, "dimension out of range at " + loc.name);
    info.dim_out = *dim_out;
    const auto basis_in = hermitian_basis(info.dim_in);
    const auto basis_out = hermitian_basis(info.dim_out);
    for (const auto& action : loc.actions) {
      CMatrix total = CMatrix::Zero(info.dim_in, info.dim_in);
      for (const auto& outcome : action.kraus) {
        for (const auto& k : outcome) total += k.adjoint() * k;
        operations_[x].push_back(superoperator(outcome, basis_in, basis_out));
      }
      if ((total - CMatrix::Identity(info.dim_in, info.dim_in)).cwiseAbs().maxCoeff() >
          kInstrumentTol)
        fail(ErrorCode::BackendError,
             "instrument is not trace preserving at " + where(loc.name, action.name));
      info.actions.push_back({action.name, action.outcome_names});
    }
    output_units_[x] = coordinates(CMatrix::Identity(info.dim_out, info.dim_out), basis_out);
    current_dim[loc.wire] = info.dim_out;
    wires[loc.wire].locations.push_back(static_cast<LocationId>(x));
    locations.push_back(std::move(info));
  }

  for (std::size_t w = 0; w < spec_.wires.size(); ++w) {
    const auto basis_in = hermitian_basis(spec_.wires[w].dim);
    const auto basis_out = hermitian_basis(current_dim[w]);
    WireData data;
    for (const auto& rho : spec_.wires[w].preparations)
      data.preparations.push_back(coordinates(rho, basis_in));
    for (const auto& e : spec_.wires[w].effects) {
      if (static_cast<std::size_t>(e.rows()) != current_dim[w] || e.rows() != e.cols())
        fail(ErrorCode::DimensionMismatch,
             "effect shape differs from the final dimension of wire '" + spec_.wires[w].name + "'");
      check_hermitian_bounded(e, 0.0, 1.0, "effect on '" + spec_.wires[w].name + "'");
      if (!wires[w].unit_effect &&
          (e - CMatrix::Identity(e.rows(), e.cols())).cwiseAbs().maxCoeff() <= kStateTol)
        wires[w].unit_effect = data.effects.size();
      data.effects.push_back(coordinates(e, basis_out));
    }
    wire_data_.push_back(std::move(data));
  }
  layout_ = Layout(std::move(locations), std::move(wires));
}

std::unique_ptr<TheoryBackend> QuantumBackend::with_extra_exteriors(std::uint64_t seed) const {
  QuantumSpec extended = spec_;
  Rng rng(seed);
  auto random_ket = [&](Eigen::Index dim) {
    Eigen::VectorXcd v(dim);
    for (Eigen::Index k = 0; k < dim; ++k) v(k) = {rng.normal(), rng.normal()};
    return Eigen::VectorXcd(v.normalized());
  };
  for (auto& wire : extended.wires) {
    const std::size_t n_prep = wire.preparations.size();
    for (std::size_t i = 0; i < n_prep; ++i) {
      wire.preparations.push_back(projector(random_ket(static_cast<Eigen::Index>(wire.dim))));
      wire.preparation_names.push_back("extra-" + std::to_string(i));
    }
    const Eigen::Index out_dim = wire.effects.front().rows();
    const std::size_t n_eff = wire.effects.size();
    for (std::size_t i = 0; i < n_eff; ++i) {
      wire.effects.push_back(projector(random_ket(out_dim)));
      wire.effect_names.push_back("extra-" + std::to_string(i));
    }
  }
  auto out = std::make_unique<QuantumBackend>(std::move(extended));
  for (std::size_t x = 0; x < layout_.num_locations(); ++x)
    out->mutable_layout().set_exterior_labels(static_cast<LocationId>(x),
                                              layout_.locations()[x].exterior_labels);
  return out;
}

std::unique_ptr<TheoryBackend> QuantumBackend::clone() const {
  return std::make_unique<QuantumBackend>(*this);
}

}  // namespace causaloid
