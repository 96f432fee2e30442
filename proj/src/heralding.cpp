#include "causaloid/heralding.hpp"

#include <algorithm>
#include <cmath>

#include "causaloid/error.hpp"

namespace causaloid {

std::vector<std::size_t> consistent_labels(const GammaSet& gamma, std::span<const ActionId> actions) {
  if (actions.size() != gamma.region.size())
    fail(ErrorCode::UnknownProcedure, "procedure for " + gamma.region.to_string() +
                                          " needs one action per location");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < gamma.size(); ++i)
    if (std::equal(actions.begin(), actions.end(), gamma.labels[i].actions.begin()))
      out.push_back(i);
  if (out.empty())
    fail(ErrorCode::UnknownProcedure, "procedure not available on region " + gamma.region.to_string());
  return out;
}

namespace {

struct ResolvedQuery {
  Region united;
  std::vector<HeraldTerm> terms;  // target first
  std::vector<std::size_t> alternatives;  // target labels sharing its procedure
};

ResolvedQuery resolve(const HeraldQuery& query, const std::vector<GammaSet>& gammas) {
  ResolvedQuery out{query.target.region, {query.target}, {}};
  for (const auto& c : query.conditions) {
    if (out.united.intersects(c.region))
      fail(ErrorCode::InvalidArgument, "herald regions must be disjoint, " + c.region.to_string() +
                                           " overlaps another named region");
    out.united = out.united.united(c.region);
    out.terms.push_back(c);
  }
  for (std::size_t t = 0; t < out.terms.size(); ++t) {
    const auto& gamma = gammas[t];
    if (out.terms[t].label >= gamma.size())
      fail(ErrorCode::UnknownLabel, "label " + std::to_string(out.terms[t].label) +
                                        " not in Gamma of region " + gamma.region.to_string());
    const auto& label = gamma.labels[out.terms[t].label];
    const auto& locs = gamma.region.locations();
    for (std::size_t i = 0; i < locs.size(); ++i)
      if (const auto it = query.procedures.find(locs[i]);
          it != query.procedures.end() && it->second != label.actions[i])
        fail(ErrorCode::UnknownProcedure, "label at location " + std::to_string(locs[i]) +
                                              " does not follow the requested procedure");
  }
  out.alternatives = consistent_labels(gammas[0], gammas[0].labels[query.target.label].actions);
  return out;
}

std::vector<GammaSet> term_gammas(const HeraldQuery& query, const Causaloid& causaloid) {
  std::vector<GammaSet> out{causaloid.gamma(query.target.region)};
  for (const auto& c : query.conditions) out.push_back(causaloid.gamma(c.region));
  return out;
}

// Gamma_x index per location of the united region, for the given term labels.
std::vector<std::size_t> elementary_labels(const Causaloid& causaloid, const ResolvedQuery& q,
                                           const std::vector<GammaSet>& gammas,
                                           std::size_t target_label) {
  const auto& locs = q.united.locations();
  std::vector<std::size_t> out(locs.size());
  for (std::size_t t = 0; t < q.terms.size(); ++t) {
    const auto& label = gammas[t].labels[t == 0 ? target_label : q.terms[t].label];
    const auto& term_locs = gammas[t].region.locations();
    for (std::size_t i = 0; i < term_locs.size(); ++i) {
      const auto pos = static_cast<std::size_t>(
          std::lower_bound(locs.begin(), locs.end(), term_locs[i]) - locs.begin());
      out[pos] = causaloid.elementary(term_locs[i])
                     .gamma.index_of(MeasurementLabel{{label.actions[i]}, {label.outcomes[i]}});
    }
  }
  return out;
}

double table_conditional(const ProbTable& table, const ResolvedQuery& q,
                         const std::vector<std::size_t>& positions, std::size_t exterior) {
  std::vector<std::size_t> idx(table.regions.size());
  for (std::size_t t = 1; t < q.terms.size(); ++t) idx[positions[t]] = q.terms[t].label;
  auto value = [&](std::size_t target_label) {
    idx[positions[0]] = target_label;
    return table.values(static_cast<Eigen::Index>(table.row_index(idx)),
                        static_cast<Eigen::Index>(exterior));
  };
  double denominator = 0.0;
  for (std::size_t alt : q.alternatives) denominator += value(alt);
  if (!(denominator > 1e-12))
    fail(ErrorCode::ZeroDenominator,
         "conditioning event has zero weight at exterior " + std::to_string(exterior));
  return value(q.terms[0].label) / denominator;
}

std::vector<std::size_t> table_positions(const ProbTable& table, const ResolvedQuery& q) {
  if (table.regions.size() != q.terms.size())
    fail(ErrorCode::ContextMismatch, "table regions differ from the query's regions");
  std::vector<std::size_t> positions;
  for (const auto& t : q.terms) positions.push_back(table.region_position(t.region));
  return positions;
}

}  // namespace

HeraldResult herald(const Causaloid& causaloid, const HeraldQuery& query, double tol,
                    const ProbTable* table) {
  const auto gammas = term_gammas(query, causaloid);
  const ResolvedQuery q = resolve(query, gammas);

  const auto target = elementary_labels(causaloid, q, gammas, query.target.label);
  const RVector u = r_vector_joint(causaloid, q.united, target);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(u.components.size());
  for (std::size_t alt : q.alternatives)
    v += r_vector_joint(causaloid, q.united, elementary_labels(causaloid, q, gammas, alt)).components;

  const double v_norm = v.norm();
  if (!(v_norm > tol))
    fail(ErrorCode::ZeroDenominatorVector,
         "no normalisable context: the summed r-vector over " + q.united.to_string() + " vanishes");
  HeraldResult result;
  result.p_raw = u.components.dot(v) / v.squaredNorm();
  result.residual = (u.components - result.p_raw * v).norm() / v_norm;
  result.well_defined = result.residual <= tol;
  if (result.well_defined) result.p = report_probability(result.p_raw).shown;

  if (!result.well_defined && table) {
    const auto positions = table_positions(*table, q);
    std::optional<HeraldWitness> w;
    for (std::size_t e = 0; e < table->exteriors.size(); ++e) {
      double value = 0.0;
      try {
        value = table_conditional(*table, q, positions, e);
      } catch (const Error& err) {
        if (err.code() == ErrorCode::ZeroDenominator) continue;
        throw;
      }
      if (!w) {
        w = HeraldWitness{e, e, value, value};
        continue;
      }
      if (value < w->low) w->low = value, w->low_exterior = e;
      if (value > w->high) w->high = value, w->high_exterior = e;
    }
    result.witness = w;
  }
  return result;
}

double conditional_from_table(const ProbTable& table, const HeraldQuery& query,
                              std::size_t exterior) {
  if (exterior >= table.exteriors.size())
    fail(ErrorCode::UnknownExterior, "exterior " + std::to_string(exterior) + " out of range");
  std::vector<GammaSet> gammas;
  auto gamma_of = [&](const Region& r) { return table.gammas[table.region_position(r)]; };
  gammas.push_back(gamma_of(query.target.region));
  for (const auto& c : query.conditions) gammas.push_back(gamma_of(c.region));
  const ResolvedQuery q = resolve(query, gammas);
  return table_conditional(table, q, table_positions(table, q), exterior);
}

}  // namespace causaloid
