#include "causaloid/prob_table.hpp"

#include <algorithm>
#include <map>

#include "causaloid/error.hpp"
#include "causaloid/tomography.hpp"

namespace causaloid {

namespace {

// Mixed-radix counter, last digit fastest. Returns false after wrapping.
bool next_multi_index(std::vector<std::size_t>& digits, std::span<const std::size_t> radix) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (++digits[i] < radix[i]) return true;
    digits[i] = 0;
  }
  return false;
}

void check_disjoint(const TheoryBackend& backend, std::span<const Region> regions) {
  if (regions.empty()) fail(ErrorCode::InvalidArgument, "at least one region required");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    for (LocationId x : regions[i].locations()) backend.layout().location(x);
    for (std::size_t j = i + 1; j < regions.size(); ++j)
      if (regions[i].intersects(regions[j]))
        fail(ErrorCode::InvalidArgument,
             "regions " + regions[i].to_string() + " and " + regions[j].to_string() + " overlap");
  }
}

}  // namespace

std::size_t GammaSet::index_of(const MeasurementLabel& label) const {
  auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label)
    fail(ErrorCode::UnknownLabel, "label not in Gamma of region " + region.to_string());
  return static_cast<std::size_t>(it - labels.begin());
}

std::vector<LocalLabel> GammaSet::local_labels(std::size_t index) const {
  if (index >= labels.size())
    fail(ErrorCode::UnknownLabel, "label index " + std::to_string(index) + " out of range");
  const auto& l = labels[index];
  std::vector<LocalLabel> out(l.actions.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {l.actions[i], l.outcomes[i]};
  return out;
}

GammaSet enumerate_labels(const TheoryBackend& backend, const Region& region) {
  return enumerate_labels(backend.layout(), region);
}

GammaSet enumerate_labels(const Layout& layout, const Region& region) {
  for (LocationId x : region.locations())
    if (x >= layout.num_locations())
      fail(ErrorCode::UnknownRegion, "region " + region.to_string() + " is not in the layout");
  GammaSet gamma{region, {}};
  const auto& locs = region.locations();
  std::vector<std::size_t> action_radix;
  for (LocationId x : locs) action_radix.push_back(layout.location(x).actions.size());
  std::vector<std::size_t> actions(locs.size(), 0);
  do {
    std::vector<std::size_t> outcome_radix;
    for (std::size_t i = 0; i < locs.size(); ++i)
      outcome_radix.push_back(layout.location(locs[i]).actions[actions[i]].outcomes.size());
    std::vector<std::size_t> outcomes(locs.size(), 0);
    do {
      MeasurementLabel label;
      for (std::size_t i = 0; i < locs.size(); ++i) {
        label.actions.push_back(static_cast<ActionId>(actions[i]));
        label.outcomes.push_back(static_cast<OutcomeId>(outcomes[i]));
      }
      gamma.labels.push_back(std::move(label));
    } while (next_multi_index(outcomes, outcome_radix));
  } while (next_multi_index(actions, action_radix));
  return gamma;
}

std::string ExteriorConfiguration::to_string() const {
  std::string out;
  for (std::size_t w = 0; w < boundary.size(); ++w) {
    if (w) out += " ";
    out += "w" + std::to_string(w) + "(prep " + std::to_string(boundary[w].preparation) +
           ", effect " + std::to_string(boundary[w].effect) + ")";
  }
  for (std::size_t i = 0; i < conditioned.size(); ++i)
    out += " x" + std::to_string(conditioned[i]) + "=" + std::to_string(conditioned_labels[i]);
  return out;
}

std::vector<ExteriorConfiguration> enumerate_exteriors(const TheoryBackend& backend,
                                                       std::span<const Region> regions) {
  const Layout& layout = backend.layout();
  std::vector<std::size_t> radix;
  for (const auto& w : layout.wires()) {
    radix.push_back(w.preparations.size());
    radix.push_back(w.effects.size());
  }
  std::vector<LocationId> conditioned;
  for (std::size_t x = 0; x < layout.num_locations(); ++x) {
    const auto id = static_cast<LocationId>(x);
    bool inside = std::any_of(regions.begin(), regions.end(),
                              [&](const Region& r) { return r.contains(id); });
    if (!inside) {
      conditioned.push_back(id);
      radix.push_back(layout.location(id).exterior_labels.size());
    }
  }
  std::vector<ExteriorConfiguration> out;
  std::vector<std::size_t> digits(radix.size(), 0);
  const std::size_t n_wires = layout.wires().size();
  do {
    ExteriorConfiguration e;
    for (std::size_t w = 0; w < n_wires; ++w)
      e.boundary.push_back({digits[2 * w], digits[2 * w + 1]});
    e.conditioned = conditioned;
    for (std::size_t i = 0; i < conditioned.size(); ++i)
      e.conditioned_labels.push_back(
          layout.location(conditioned[i]).exterior_labels[digits[2 * n_wires + i]]);
    out.push_back(std::move(e));
  } while (!radix.empty() && next_multi_index(digits, radix));
  return out;
}

std::size_t ProbTable::row_index(std::span<const std::size_t> label_indices) const {
  if (label_indices.size() != gammas.size())
    fail(ErrorCode::InvalidArgument, "one label per region expected");
  std::size_t row = 0;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (label_indices[i] >= gammas[i].size())
      fail(ErrorCode::UnknownLabel, "label index out of range for region " +
                                        gammas[i].region.to_string());
    row = row * gammas[i].size() + label_indices[i];
  }
  return row;
}

std::vector<std::size_t> ProbTable::label_indices(std::size_t row) const {
  std::vector<std::size_t> out(gammas.size());
  for (std::size_t i = gammas.size(); i-- > 0;) {
    out[i] = row % gammas[i].size();
    row /= gammas[i].size();
  }
  return out;
}

std::size_t ProbTable::region_position(const Region& region) const {
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (regions[i] == region) return i;
  fail(ErrorCode::UnknownRegion, "region " + region.to_string() + " is not in the table");
}

namespace {

void fill_exterior(const ExteriorConfiguration& e, const Layout& layout,
                   std::vector<LocalLabel>& labels) {
  for (std::size_t i = 0; i < e.conditioned.size(); ++i)
    labels[e.conditioned[i]] = layout.label_at(e.conditioned[i], e.conditioned_labels[i]);
}

}  // namespace

double joint_prob(const TheoryBackend& backend, std::span<const Region> regions,
                  std::span<const MeasurementLabel> labels, const ExteriorConfiguration& exterior) {
  check_disjoint(backend, regions);
  if (labels.size() != regions.size())
    fail(ErrorCode::InvalidArgument, "one label per region expected");
  const Layout& layout = backend.layout();
  std::vector<LocalLabel> local(layout.num_locations());
  std::vector<bool> covered(layout.num_locations(), false);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const auto& locs = regions[r].locations();
    if (labels[r].actions.size() != locs.size() || labels[r].outcomes.size() != locs.size())
      fail(ErrorCode::UnknownLabel, "label does not match region " + regions[r].to_string());
    for (std::size_t i = 0; i < locs.size(); ++i) {
      local[locs[i]] = {labels[r].actions[i], labels[r].outcomes[i]};
      layout.label_index(locs[i], local[locs[i]]);
      covered[locs[i]] = true;
    }
  }
  for (std::size_t i = 0; i < exterior.conditioned.size(); ++i) {
    const LocationId x = exterior.conditioned[i];
    if (x >= covered.size() || covered[x])
      fail(ErrorCode::UnknownExterior, "exterior conditions a location inside the regions");
    local[x] = layout.label_at(x, exterior.conditioned_labels[i]);
    covered[x] = true;
  }
  if (std::find(covered.begin(), covered.end(), false) != covered.end())
    fail(ErrorCode::UnknownExterior, "exterior leaves a location unspecified");
  return backend.evaluate(local, exterior.boundary);
}

ProbTable build_prob_table(const TheoryBackend& backend, std::span<const Region> regions,
                           std::size_t cap) {
  check_disjoint(backend, regions);
  ProbTable table;
  table.regions.assign(regions.begin(), regions.end());
  std::size_t rows = 1;
  for (const auto& r : regions) {
    table.gammas.push_back(enumerate_labels(backend, r));
    rows *= table.gammas.back().size();
  }
  table.exteriors = enumerate_exteriors(backend, regions);
  const std::size_t cols = table.exteriors.size();
  if (rows > cap || cols > cap || rows * cols > cap)
    fail(ErrorCode::TableTooLarge, std::to_string(rows) + " x " + std::to_string(cols) +
                                       " entries exceed the cap of " + std::to_string(cap));

  const Layout& layout = backend.layout();
  // Per-row local labels, flattened for reuse across columns.
  std::vector<std::vector<std::pair<LocationId, LocalLabel>>> row_labels(rows);
  for (std::size_t row = 0; row < rows; ++row) {
    const auto idx = table.label_indices(row);
    for (std::size_t r = 0; r < regions.size(); ++r) {
      const auto local = table.gammas[r].local_labels(idx[r]);
      const auto& locs = regions[r].locations();
      for (std::size_t i = 0; i < locs.size(); ++i) row_labels[row].push_back({locs[i], local[i]});
    }
  }

  table.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<LocalLabel> local(layout.num_locations());
  for (std::size_t c = 0; c < cols; ++c) {
    const auto& e = table.exteriors[c];
    fill_exterior(e, layout, local);
    for (std::size_t row = 0; row < rows; ++row) {
      for (const auto& [x, l] : row_labels[row]) local[x] = l;
      table.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) =
          backend.evaluate(local, e.boundary);
    }
  }
  return table;
}

NormalizationReport check_normalization(const TheoryBackend& backend, const ProbTable& table) {
  NormalizationReport report;
  const Eigen::Index rows = table.values.rows();
  if (rows == 0) return report;
  if (table.values.minCoeff() < -1e-12 || table.values.maxCoeff() > 1.0 + 1e-12)
    fail(ErrorCode::BackendError, "table entry outside [0, 1]");

  // Group rows by joint procedure (action tuple of every region).
  std::map<std::vector<ActionId>, std::size_t> groups;
  std::vector<std::size_t> group_of(static_cast<std::size_t>(rows));
  for (Eigen::Index row = 0; row < rows; ++row) {
    const auto idx = table.label_indices(static_cast<std::size_t>(row));
    std::vector<ActionId> key;
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto& a = table.gammas[r].labels[idx[r]].actions;
      key.insert(key.end(), a.begin(), a.end());
    }
    group_of[static_cast<std::size_t>(row)] =
        groups.emplace(std::move(key), groups.size()).first->second;
  }

  const auto& wires = backend.layout().wires();
  std::vector<double> sums(groups.size());
  for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index row = 0; row < rows; ++row)
      sums[group_of[static_cast<std::size_t>(row)]] += table.values(row, c);
    const auto& e = table.exteriors[static_cast<std::size_t>(c)];
    bool complete = e.conditioned.empty();
    for (std::size_t w = 0; w < wires.size() && complete; ++w)
      complete = wires[w].unit_effect && *wires[w].unit_effect == e.boundary[w].effect;
    if (complete) ++report.complete_exteriors;
    for (double s : sums) {
      report.max_total = std::max(report.max_total, s);
      if (complete) report.max_unit_defect = std::max(report.max_unit_defect, std::abs(s - 1.0));
    }
  }
  if (report.max_total > 1.0 + 1e-10)
    fail(ErrorCode::BackendError, "outcome-summed weight exceeds 1");
  if (report.max_unit_defect > 1e-10)
    fail(ErrorCode::BackendError, "complete readout does not sum to 1");
  return report;
}

SpanReport validate_exterior_span(const TheoryBackend& backend, const Region& region, double tol,
                                  std::uint64_t seed) {
  const Region regions[] = {region};
  const auto base = build_prob_table(backend, regions);
  const auto extended_backend = backend.with_extra_exteriors(seed);
  const auto extended = build_prob_table(*extended_backend, regions);
  SpanReport report;
  report.region = region;
  report.rank = select_independent_rows(base.values, tol).size();
  report.extended_rank = select_independent_rows(extended.values, tol).size();
  report.exteriors = base.exteriors.size();
  report.extended_exteriors = extended.exteriors.size();
  if (report.extended_rank > report.rank)
    fail(ErrorCode::SpanDeficient,
         "region " + region.to_string() + ": rank grows from " + std::to_string(report.rank) +
             " to " + std::to_string(report.extended_rank) + " when exteriors are added");
  return report;
}

}  // namespace causaloid
