#include "causaloid/report.hpp"

#include <algorithm>
#include <cmath>

#include "causaloid/error.hpp"
#include "causaloid/heralding.hpp"
#include "causaloid/rng.hpp"

namespace causaloid {

std::string region_name(const Layout& layout, const Region& region) {
  std::string out;
  for (LocationId x : region.locations()) {
    if (!out.empty()) out += "+";
    out += layout.location(x).name;
  }
  return out;
}

Region parse_region(const Layout& layout, const std::string& text) {
  std::vector<LocationId> locs;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t plus = text.find('+', start);
    const std::string part = text.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
    const auto x = layout.find(part);
    if (!x) fail(ErrorCode::UnknownEntry, "unknown region \"" + part + "\"");
    locs.push_back(*x);
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  return Region(std::move(locs));
}

std::string dump_report(const Json& report) { return report.dump(2) + "\n"; }

namespace {

template <typename F>
auto in_context(const std::string& context, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    std::string msg = e.what();
    if (const auto colon = msg.find(": "); colon != std::string::npos) msg = msg.substr(colon + 2);
    throw Error(e.code(), context + ": " + msg);
  }
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

std::vector<std::string> label_names(const Layout& layout, const GammaSet& gamma) {
  std::vector<std::string> out;
  for (const auto& label : gamma.labels) {
    std::string s;
    for (std::size_t i = 0; i < label.actions.size(); ++i) {
      if (i) s += ",";
      const auto& action = layout.location(gamma.region.locations()[i]).actions[label.actions[i]];
      s += action.name + "/" + action.outcomes[label.outcomes[i]];
    }
    out.push_back(std::move(s));
  }
  return out;
}

Json lambda_json(const Eigen::MatrixXd& m, bool full) {
  Json j{{"rows", m.rows()},
         {"cols", m.cols()},
         {"max_abs", m.size() ? m.cwiseAbs().maxCoeff() : 0.0},
         {"sha256", matrix_digest(m)}};
  if (full) j["matrix"] = matrix_to_json(m);
  return j;
}

struct Reconstruction {
  double max_error = 0.0;
  std::size_t comparisons = 0;
};

// Probabilities rebuilt from the registry against the oracle table.
Reconstruction check_composite(const Causaloid& causaloid, const CompositeCompression& c) {
  const auto& lambda = c.lambda;
  Eigen::MatrixXd k = Eigen::MatrixXd::Ones(1, 1);
  for (const auto& r : lambda.composite.constituents())
    k = kron(k, causaloid.elementary(r.least()).lambda.matrix);
  Eigen::MatrixXd states(static_cast<Eigen::Index>(lambda.omega.size()), c.joint.values.cols());
  for (std::size_t j = 0; j < lambda.omega.size(); ++j)
    states.row(static_cast<Eigen::Index>(j)) =
        c.joint.values.row(static_cast<Eigen::Index>(lambda.omega.indices[j]));
  const Eigen::MatrixXd predicted = k * (lambda.matrix * states);
  return {(predicted - c.table.values).cwiseAbs().maxCoeff(),
          static_cast<std::size_t>(predicted.size())};
}

Reconstruction check_region(const RegionCompression& r) {
  Eigen::MatrixXd states(static_cast<Eigen::Index>(r.lambda.omega.size()), r.matrix.values.cols());
  for (std::size_t j = 0; j < r.lambda.omega.size(); ++j)
    states.row(static_cast<Eigen::Index>(j)) =
        r.matrix.values.row(static_cast<Eigen::Index>(r.lambda.omega.indices[j]));
  const Eigen::MatrixXd predicted = r.lambda.matrix * states;
  return {(predicted - r.matrix.values).cwiseAbs().maxCoeff(),
          static_cast<std::size_t>(predicted.size())};
}

}  // namespace

PipelineResult run_pipeline(const Scenario& scenario, const PipelineOptions& options) {
  const TheoryBackend& backend = *scenario.backend;
  const Layout& layout = backend.layout();
  CompressionOptions copts;
  copts.rank_tol = options.rank_tol.value_or(scenario.rank_tol);
  copts.residual_tol = scenario.residual_tol;
  copts.table_cap = scenario.table_cap;
  const double herald_tol = options.herald_tol.value_or(scenario.herald_tol);
  const std::uint64_t seed = options.seed.value_or(scenario.seed);

  Json report;
  report["format_version"] = kReportFormatVersion;
  report["tool"] = kToolName;
  report["tool_version"] = kToolVersion;
  report["rng"] = kRngName;
  report["scenario"] = scenario.name;
  report["theory"] = std::string(backend.theory());
  report["seed"] = seed;
  report["tolerances"] = {{"rank", copts.rank_tol}, {"residual", copts.residual_tol}, {"herald", herald_tol}};

  Json systems = Json::array();
  for (const auto& w : layout.wires())
    systems.push_back({{"name", w.name},
                       {"dim", w.dim},
                       {"preparations", w.preparations},
                       {"effects", w.effects},
                       {"complete_readout", w.unit_effect.has_value()}});
  report["systems"] = std::move(systems);

  // Composites: requested ones plus whatever the heralds need.
  std::vector<CompositeRegion> composites = scenario.composites;
  std::vector<HeraldQuery> queries;
  for (const auto& h : scenario.heralds) {
    queries.push_back(make_query(layout, h));
    std::vector<Region> parts{queries.back().target.region};
    for (const auto& c : queries.back().conditions) parts.push_back(c.region);
    if (parts.size() < 2) continue;
    CompositeRegion c(parts);
    if (std::none_of(composites.begin(), composites.end(),
                     [&](const CompositeRegion& o) { return o.united() == c.united(); }))
      composites.push_back(std::move(c));
  }

  PipelineResult result;
  result.build.causaloid = Causaloid(std::string(backend.theory()), layout);
  Reconstruction total;
  Json regions = Json::array();
  for (LocationId x = 0; x < layout.num_locations(); ++x) {
    const Region region = Region::single(x);
    const std::string name = layout.location(x).name;
    Json jr;
    jr["name"] = name;
    jr["location"] = x;
    if (scenario.span_check) {
      const SpanReport span = in_context("region " + name, [&] {
        return validate_exterior_span(backend, region, copts.rank_tol, seed);
      });
      jr["span"] = {{"rank", span.rank},
                    {"extended_rank", span.extended_rank},
                    {"exteriors", span.exteriors},
                    {"extended_exteriors", span.extended_exteriors}};
    }
    RegionCompression rc = in_context("region " + name, [&] { return compress_region(backend, region, copts); });
    jr["gamma_size"] = rc.gamma.size();
    jr["labels"] = label_names(layout, rc.gamma);
    jr["omega_size"] = rc.lambda.omega.size();
    jr["omega"] = rc.lambda.omega.indices;
    jr["full_operation_dimension"] = backend.full_operation_dimension(x);
    jr["lambda"] = lambda_json(rc.lambda.matrix, options.full_matrices);
    if (scenario.reconstruction) {
      const auto rec = check_region(rc);
      jr["reconstruction_max_error"] = rec.max_error;
      total.max_error = std::max(total.max_error, rec.max_error);
      total.comparisons += rec.comparisons;
    }
    regions.push_back(std::move(jr));
    result.build.causaloid.add(ElementaryEntry{rc.gamma, rc.lambda});
    result.build.regions.push_back(std::move(rc));
  }
  report["regions"] = std::move(regions);

  Json jcomposites = Json::array();
  for (const auto& c : composites) {
    const std::string name = region_name(layout, c.united());
    std::vector<TomographicLambda> factors;
    for (const auto& r : c.constituents()) factors.push_back(result.build.causaloid.elementary(r.least()).lambda);
    CompositeCompression cc =
        in_context("composite " + name, [&] { return compress_composite(backend, c, factors, copts); });
    const auto& lambda = cc.lambda;
    const std::size_t product = product_of(lambda.factors).size();
    // Subset of the product set, asserted on every run.
    if (lambda.omega.parent_size != product ||
        std::any_of(lambda.omega.indices.begin(), lambda.omega.indices.end(),
                    [&](std::size_t k) { return k >= product; }))
      fail(ErrorCode::ContextMismatch, "composite " + name + ": Omega escapes the product set");
    Json jc;
    jc["name"] = name;
    Json parts = Json::array();
    for (const auto& r : c.constituents()) parts.push_back(region_name(layout, r));
    jc["constituents"] = std::move(parts);
    jc["product_size"] = product;
    jc["omega_size"] = lambda.omega.size();
    jc["omega"] = lambda.omega.indices;
    jc["adjacent"] = is_causally_adjacent(lambda.omega, lambda.factors);
    jc["lambda"] = lambda_json(lambda.matrix, options.full_matrices);
    const auto norm = in_context("composite " + name, [&] { return check_normalization(backend, cc.table); });
    jc["normalization"] = {{"max_total", norm.max_total},
                           {"max_unit_defect", norm.max_unit_defect},
                           {"complete_exteriors", norm.complete_exteriors}};
    Json meds = Json::array();
    for (const auto& m : mediators(backend, c, copts))
      meds.push_back({{"region", layout.location(m.location).name},
                      {"omega_size", m.omega_size},
                      {"full_operation_dimension", m.full_dimension},
                      {"informationally_complete", m.informationally_complete}});
    jc["mediators"] = std::move(meds);
    if (scenario.order_symmetry && c.size() == 2) {
      const auto sym = in_context("composite " + name, [&] { return order_symmetry(cc.table, copts); });
      jc["order_symmetry"] = {{"omegas_agree", sym.omegas_agree},
                              {"max_fiducial_difference", sym.max_fiducial_difference},
                              {"max_reconstruction_difference", sym.max_reconstruction_difference},
                              {"max_table_difference", sym.max_table_difference}};
    }
    result.build.causaloid.add(CompositeEntry{lambda});
    if (scenario.reconstruction) {
      const auto rec = check_composite(result.build.causaloid, cc);
      jc["reconstruction_max_error"] = rec.max_error;
      total.max_error = std::max(total.max_error, rec.max_error);
      total.comparisons += rec.comparisons;
    }
    jcomposites.push_back(std::move(jc));
    result.build.composites.push_back(std::move(cc));
  }
  report["composites"] = std::move(jcomposites);

  if (scenario.adjacency) {
    std::vector<Region> all;
    for (LocationId x = 0; x < layout.num_locations(); ++x) all.push_back(Region::single(x));
    const auto graph = adjacency_graph(backend, all, copts);
    Json edges = Json::array();
    for (const auto& e : graph.edges)
      edges.push_back({layout.location(static_cast<LocationId>(e.a)).name,
                       layout.location(static_cast<LocationId>(e.b)).name});
    Json pairs = Json::array();
    for (const auto& p : graph.pairs)
      pairs.push_back({{"regions", {layout.location(static_cast<LocationId>(p.a)).name,
                                    layout.location(static_cast<LocationId>(p.b)).name}},
                       {"omega_size", p.omega_size},
                       {"product_size", p.product_size},
                       {"adjacent", p.adjacent}});
    report["adjacency"] = {{"edges", std::move(edges)}, {"pairs", std::move(pairs)}};
  }

  Json heralds = Json::array();
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& spec = scenario.heralds[i];
    const auto& q = queries[i];
    std::vector<Region> named{q.target.region};
    for (const auto& c : q.conditions) named.push_back(c.region);
    const ProbTable table = build_prob_table(backend, named, copts.table_cap);
    const HeraldResult hr = in_context("herald " + spec.name, [&] {
      return herald(result.build.causaloid, q, herald_tol, &table);
    });
    Json jh{{"name", spec.name}, {"target", spec.target}, {"given", spec.given}};
    jh["well_defined"] = hr.well_defined;
    jh["p"] = hr.p ? Json(*hr.p) : Json(nullptr);
    jh["p_raw"] = hr.p_raw;
    jh["residual"] = hr.residual;
    if (hr.witness) {
      jh["witness"] = {{"low", {{"exterior", hr.witness->low_exterior},
                                {"configuration", table.exteriors[hr.witness->low_exterior].to_string()},
                                {"conditional", hr.witness->low}}},
                       {"high", {{"exterior", hr.witness->high_exterior},
                                 {"configuration", table.exteriors[hr.witness->high_exterior].to_string()},
                                 {"conditional", hr.witness->high}}}};
    }
    result.all_heralds_well_defined = result.all_heralds_well_defined && hr.well_defined;
    heralds.push_back(std::move(jh));
  }
  report["heralds"] = std::move(heralds);

  if (scenario.reconstruction)
    report["reconstruction"] = {{"max_error", total.max_error}, {"comparisons", total.comparisons}};
  result.report = std::move(report);
  return result;
}

}  // namespace causaloid
