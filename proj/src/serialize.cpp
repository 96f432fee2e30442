#include "causaloid/serialize.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <openssl/evp.h>

#include "causaloid/error.hpp"

namespace causaloid {

std::string hex_float(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", value);
  return buf;
}

double parse_hex_float(const std::string& text) {
  if (text.empty()) fail(ErrorCode::SchemaError, "empty number");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || errno == ERANGE)
    fail(ErrorCode::SchemaError, "not a number: \"" + text + "\"");
  return v;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(hex_float(m(i, j)));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    fail(ErrorCode::SchemaError, "matrix needs rows, cols and data");
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || !data.is_array() ||
      data.size() != static_cast<std::size_t>(rows * cols))
    fail(ErrorCode::SchemaError, "matrix data length does not match its shape");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = data[k++];
      if (!v.is_string()) fail(ErrorCode::SchemaError, "matrix entries must be hex-float strings");
      m(r, c) = parse_hex_float(v.get<std::string>());
    }
  return m;
}

std::string matrix_digest(const Eigen::MatrixXd& m) {
  std::string text = std::to_string(m.rows()) + "x" + std::to_string(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) text += " " + hex_float(m(i, j));
  unsigned char hash[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), hash, &len, EVP_sha256(), nullptr);
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += digits[hash[i] >> 4];
    out += digits[hash[i] & 15];
  }
  return out;
}

namespace {

Json layout_to_json(const Layout& layout) {
  Json wires = Json::array();
  for (const auto& w : layout.wires()) {
    Json jw{{"name", w.name}, {"dim", w.dim}, {"locations", w.locations},
            {"preparations", w.preparations}, {"effects", w.effects}};
    jw["unit_effect"] = w.unit_effect ? Json(*w.unit_effect) : Json(nullptr);
    wires.push_back(std::move(jw));
  }
  Json locations = Json::array();
  for (const auto& l : layout.locations()) {
    Json actions = Json::array();
    for (const auto& a : l.actions) actions.push_back({{"name", a.name}, {"outcomes", a.outcomes}});
    locations.push_back({{"name", l.name},
                         {"wire", l.wire},
                         {"dim_in", l.dim_in},
                         {"dim_out", l.dim_out},
                         {"actions", std::move(actions)},
                         {"exterior_labels", l.exterior_labels}});
  }
  return Json{{"wires", std::move(wires)}, {"locations", std::move(locations)}};
}

Layout layout_from_json(const Json& j) {
  std::vector<WireInfo> wires;
  for (const auto& jw : j.at("wires")) {
    WireInfo w;
    w.name = jw.at("name").get<std::string>();
    w.dim = jw.at("dim").get<std::size_t>();
    w.locations = jw.at("locations").get<std::vector<LocationId>>();
    w.preparations = jw.at("preparations").get<std::vector<std::string>>();
    w.effects = jw.at("effects").get<std::vector<std::string>>();
    if (!jw.at("unit_effect").is_null()) w.unit_effect = jw.at("unit_effect").get<std::size_t>();
    wires.push_back(std::move(w));
  }
  std::vector<LocationInfo> locations;
  for (const auto& jl : j.at("locations")) {
    LocationInfo l;
    l.name = jl.at("name").get<std::string>();
    l.wire = jl.at("wire").get<std::size_t>();
    l.dim_in = jl.at("dim_in").get<std::size_t>();
    l.dim_out = jl.at("dim_out").get<std::size_t>();
    for (const auto& ja : jl.at("actions"))
      l.actions.push_back({ja.at("name").get<std::string>(),
                           ja.at("outcomes").get<std::vector<std::string>>()});
    l.exterior_labels = jl.at("exterior_labels").get<std::vector<std::size_t>>();
    if (l.wire >= wires.size()) fail(ErrorCode::SchemaError, "location " + l.name + " on unknown wire");
    locations.push_back(std::move(l));
  }
  for (const auto& w : wires)
    for (LocationId x : w.locations)
      if (x >= locations.size()) fail(ErrorCode::SchemaError, "wire " + w.name + " lists unknown location");
  return Layout(std::move(locations), std::move(wires));
}

Json region_json(const Region& r) { return Json(r.locations()); }

Region region_from_json(const Json& j) { return Region(j.get<std::vector<LocationId>>()); }

Json composite_json(const CompositeRegion& c) {
  Json out = Json::array();
  for (const auto& r : c.constituents()) out.push_back(region_json(r));
  return out;
}

CompositeRegion composite_from_json(const Json& j) {
  std::vector<Region> regions;
  for (const auto& r : j) regions.push_back(region_from_json(r));
  return CompositeRegion(std::move(regions));
}

void check_unit_rows(const Eigen::MatrixXd& m, const OmegaSet& omega, const std::string& what) {
  for (std::size_t j = 0; j < omega.size(); ++j) {
    const auto row = static_cast<Eigen::Index>(omega.indices[j]);
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (std::abs(m(row, c) - (c == static_cast<Eigen::Index>(j) ? 1.0 : 0.0)) > 1e-9)
        fail(ErrorCode::SchemaError, what + ": fiducial row " + std::to_string(row) + " is not a unit row");
  }
}

OmegaSet omega_from_json(const Json& j, const Region& region, std::size_t parent) {
  OmegaSet omega{region, j.get<std::vector<std::size_t>>(), parent};
  for (std::size_t i = 0; i < omega.size(); ++i)
    if (omega.indices[i] >= parent || (i > 0 && omega.indices[i] <= omega.indices[i - 1]))
      fail(ErrorCode::SchemaError, "Omega of " + region.to_string() + " is not an increasing subset");
  return omega;
}

}  // namespace

Json causaloid_to_json(const Causaloid& causaloid) {
  Json elementary = Json::array();
  for (const auto& [x, entry] : causaloid.elementary_entries())
    elementary.push_back({{"location", x},
                          {"omega", entry.lambda.omega.indices},
                          {"lambda", matrix_to_json(entry.lambda.matrix)}});
  Json composites = Json::array();
  for (const auto& [united, entry] : causaloid.composite_entries())
    composites.push_back({{"constituents", composite_json(entry.lambda.composite)},
                          {"omega", entry.lambda.omega.indices},
                          {"lambda", matrix_to_json(entry.lambda.matrix)}});
  Json rules = Json::array();
  for (const auto& rule : causaloid.rules()) {
    Json regions = Json::array();
    for (const auto& c : rule.regions) regions.push_back(composite_json(c));
    rules.push_back({{"id", rule.id}, {"regions", std::move(regions)}});
  }
  return Json{{"format_version", kCausaloidFormatVersion},
              {"kind", "causaloid"},
              {"theory", causaloid.theory()},
              {"layout", layout_to_json(causaloid.layout())},
              {"elementary", std::move(elementary)},
              {"composites", std::move(composites)},
              {"rules", std::move(rules)}};
}

Causaloid causaloid_from_json(const Json& j) {
  try {
    if (j.at("format_version").get<int>() != kCausaloidFormatVersion)
      fail(ErrorCode::SchemaError, "unsupported causaloid format_version");
    if (j.at("kind").get<std::string>() != "causaloid")
      fail(ErrorCode::SchemaError, "document is not a causaloid");
    Causaloid c(j.at("theory").get<std::string>(), layout_from_json(j.at("layout")));
    for (const auto& je : j.at("elementary")) {
      const auto x = je.at("location").get<LocationId>();
      const Region region = Region::single(x);
      GammaSet gamma = c.gamma(region);
      const OmegaSet omega = omega_from_json(je.at("omega"), region, gamma.size());
      Eigen::MatrixXd m = matrix_from_json(je.at("lambda"));
      check_unit_rows(m, omega, "region " + region.to_string());
      c.add(ElementaryEntry{std::move(gamma), TomographicLambda{region, omega, std::move(m)}});
    }
    for (const auto& jc : j.at("composites")) {
      const CompositeRegion composite = composite_from_json(jc.at("constituents"));
      std::vector<OmegaSet> factors;
      for (const auto& r : composite.constituents()) factors.push_back(c.omega(r.least()));
      const std::size_t product = product_of(factors).size();
      const OmegaSet omega = omega_from_json(jc.at("omega"), composite.united(), product);
      Eigen::MatrixXd m = matrix_from_json(jc.at("lambda"));
      check_unit_rows(m, omega, "composite " + composite.united().to_string());
      c.add(CompositeEntry{CompositionalLambda{composite, std::move(factors), omega, std::move(m)}});
    }
    for (const auto& jr : j.at("rules")) {
      MetaRule rule{jr.at("id").get<std::string>(), {}};
      if (rule.id != kRuleIdentity && rule.id != kRuleTensorFactorization)
        fail(ErrorCode::SchemaError, "unknown rule " + rule.id);
      for (const auto& jc : jr.at("regions")) rule.regions.push_back(composite_from_json(jc));
      c.add_rule(std::move(rule));
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("malformed causaloid document: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaError) throw;
    fail(ErrorCode::SchemaError, std::string("invalid causaloid document: ") + e.what());
  }
}

}  // namespace causaloid
