#include "causaloid/scenario.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "causaloid/serialize.hpp"

namespace causaloid {

namespace {

std::string join_issues(const std::vector<SchemaIssue>& issues) {
  std::string out;
  for (const auto& i : issues) {
    if (!out.empty()) out += "; ";
    out += i.path.empty() ? std::string("<root>") : i.path;
    if (i.line) out += " (line " + std::to_string(i.line) + ")";
    out += ": " + i.message;
  }
  return out;
}

}  // namespace

SchemaErrors::SchemaErrors(std::vector<SchemaIssue> issues)
    : Error(ErrorCode::SchemaError, join_issues(issues)), issues_(std::move(issues)) {}

namespace {

using cd = std::complex<double>;

// Collects schema issues with approximate line numbers.
class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  std::vector<SchemaIssue> issues;

  void issue(const std::string& path, const std::string& message) {
    issues.push_back({path, line_of(path), message});
  }

  // Issues for each key of `obj` not in `allowed`. False if obj is not an object.
  bool object(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
      issue(path, "expected an object");
      return false;
    }
    for (const auto& [key, value] : obj.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) issue(join(path, key), "unknown key \"" + key + "\"");
    }
    return true;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
  static std::string at(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
  }

  const Json* field(const Json& obj, const std::string& path, const char* key, bool required) {
    if (!obj.is_object()) return nullptr;
    const auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) issue(join(path, key), "missing required key \"" + std::string(key) + "\"");
      return nullptr;
    }
    return &*it;
  }

  std::optional<std::string> string(const Json* j, const std::string& path) {
    if (!j) return std::nullopt;
    if (!j->is_string()) {
      issue(path, "expected a string");
      return std::nullopt;
    }
    return j->get<std::string>();
  }

  std::optional<double> number(const Json* j, const std::string& path) {
    if (!j) return std::nullopt;
    if (!j->is_number()) {
      issue(path, "expected a number");
      return std::nullopt;
    }
    return j->get<double>();
  }

  std::optional<std::uint64_t> unsigned_int(const Json* j, const std::string& path) {
    if (!j) return std::nullopt;
    if (!j->is_number_unsigned()) {
      issue(path, "expected a non-negative integer");
      return std::nullopt;
    }
    return j->get<std::uint64_t>();
  }

  std::optional<bool> boolean(const Json* j, const std::string& path) {
    if (!j) return std::nullopt;
    if (!j->is_boolean()) {
      issue(path, "expected true or false");
      return std::nullopt;
    }
    return j->get<bool>();
  }

  bool array(const Json* j, const std::string& path) {
    if (!j) return false;
    if (!j->is_array()) {
      issue(path, "expected an array");
      return false;
    }
    return true;
  }

  std::optional<cd> complex(const Json& j, const std::string& path) {
    if (j.is_number()) return cd(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
      return cd(j[0].get<double>(), j[1].get<double>());
    issue(path, "expected a number or a [re, im] pair");
    return std::nullopt;
  }

  std::optional<CMatrix> cmatrix(const Json* j, const std::string& path) {
    if (!array(j, path) || j->empty() || !(*j)[0].is_array()) {
      if (j && j->is_array()) issue(path, "expected a non-empty array of rows");
      return std::nullopt;
    }
    const std::size_t rows = j->size(), cols = (*j)[0].size();
    CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
      const auto& row = (*j)[r];
      if (!row.is_array() || row.size() != cols) {
        issue(at(path, r), "rows must have equal length");
        return std::nullopt;
      }
      for (std::size_t c = 0; c < cols; ++c) {
        const auto v = complex(row[c], at(at(path, r), c));
        if (!v) return std::nullopt;
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
      }
    }
    return m;
  }

  std::optional<Eigen::VectorXd> real_vector(const Json* j, const std::string& path, std::size_t dim) {
    if (!array(j, path)) return std::nullopt;
    if (j->size() != dim) {
      issue(path, "expected " + std::to_string(dim) + " entries");
      return std::nullopt;
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
      const auto x = number(&(*j)[i], at(path, i));
      if (!x) return std::nullopt;
      v(static_cast<Eigen::Index>(i)) = *x;
    }
    return v;
  }

  std::optional<Eigen::VectorXcd> ket(const Json* j, const std::string& path, std::size_t dim) {
    if (!array(j, path)) return std::nullopt;
    if (j->size() != dim) {
      issue(path, "expected " + std::to_string(dim) + " amplitudes");
      return std::nullopt;
    }
    Eigen::VectorXcd v(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
      const auto x = complex((*j)[i], at(path, i));
      if (!x) return std::nullopt;
      v(static_cast<Eigen::Index>(i)) = *x;
    }
    if (v.norm() < 1e-12) {
      issue(path, "zero vector");
      return std::nullopt;
    }
    return v / v.norm();
  }

 private:
  std::size_t line_of(const std::string& path) const {
    std::size_t pos = 0, found = std::string::npos;
    std::size_t i = 0;
    while (i < path.size()) {
      if (path[i] == '.') {
        ++i;
        continue;
      }
      if (path[i] == '[') {
        i = path.find(']', i);
        if (i == std::string::npos) break;
        ++i;
        continue;
      }
      const std::size_t end = path.find_first_of(".[", i);
      const std::string key = path.substr(i, end == std::string::npos ? std::string::npos : end - i);
      const std::size_t p = text_.find("\"" + key + "\"", pos);
      if (p == std::string::npos) break;
      pos = found = p;
      i = end == std::string::npos ? path.size() : end;
    }
    if (found == std::string::npos) return 0;
    std::size_t line = 1;
    for (std::size_t k = 0; k < found; ++k) line += text_[k] == '\n';
    return line;
  }

  const std::string& text_;
};

std::string fmt_angle(double deg) {
  std::ostringstream s;
  s << deg;
  return s.str();
}

// Named pure states: "ic", "points", {"name", "angle"}, {"name", "ket"}.
std::vector<std::pair<std::string, Eigen::VectorXcd>> read_kets(Reader& rd, const Json& j,
                                                                const std::string& path,
                                                                std::size_t dim) {
  std::vector<std::pair<std::string, Eigen::VectorXcd>> out;
  auto one = [&](const Json& e, const std::string& p) {
    if (e.is_string()) {
      const auto s = e.get<std::string>();
      if (s == "ic") {
        const auto states = informationally_complete_states(dim);
        for (std::size_t i = 0; i < states.size(); ++i) out.push_back({"ic" + std::to_string(i), states[i]});
      } else if (s == "points") {
        for (std::size_t i = 0; i < dim; ++i)
          out.push_back({"z" + std::to_string(i), Eigen::VectorXcd::Unit(static_cast<Eigen::Index>(dim),
                                                                          static_cast<Eigen::Index>(i))});
      } else {
        rd.issue(p, "unknown state family \"" + s + "\"");
      }
      return;
    }
    if (!rd.object(e, p, {"name", "angle", "ket"})) return;
    const auto name = rd.string(rd.field(e, p, "name", false), Reader::join(p, "name"));
    if (const Json* a = rd.field(e, p, "angle", false)) {
      if (dim != 2) return rd.issue(p, "angles describe qubit polarisations only");
      if (const auto deg = rd.number(a, Reader::join(p, "angle")))
        out.push_back({name.value_or("pol" + fmt_angle(*deg)), polarisation_state(*deg)});
    } else if (const Json* k = rd.field(e, p, "ket", false)) {
      if (const auto v = rd.ket(k, Reader::join(p, "ket"), dim))
        out.push_back({name.value_or("ket" + std::to_string(out.size())), *v});
    } else {
      rd.issue(p, "state needs \"angle\" or \"ket\"");
    }
  };
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) one(j[i], Reader::at(path, i));
  } else {
    one(j, path);
  }
  return out;
}

// Preparations or effects of one quantum system.
void read_quantum_boundary(Reader& rd, const Json& j, const std::string& path, std::size_t dim,
                           bool effects, std::vector<CMatrix>& ops, std::vector<std::string>& names) {
  auto one = [&](const Json& e, const std::string& p) {
    const auto d = static_cast<Eigen::Index>(dim);
    if (e.is_string() && (e == "unit" || e == "uniform")) {
      if (effects != (e == "unit")) return rd.issue(p, "\"" + e.get<std::string>() + "\" is not allowed here");
      ops.push_back(effects ? CMatrix(CMatrix::Identity(d, d)) : CMatrix(CMatrix::Identity(d, d) / double(dim)));
      names.push_back(e.get<std::string>());
      return;
    }
    if (e.is_object() && e.contains(effects ? "matrix" : "density")) {
      const char* key = effects ? "matrix" : "density";
      if (!rd.object(e, p, {"name", key})) return;
      const auto name = rd.string(rd.field(e, p, "name", false), Reader::join(p, "name"));
      if (const auto m = rd.cmatrix(rd.field(e, p, key, true), Reader::join(p, key))) {
        if (m->rows() != d || m->cols() != d)
          return rd.issue(Reader::join(p, key), "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
        ops.push_back(*m);
        names.push_back(name.value_or(std::string(key) + std::to_string(ops.size() - 1)));
      }
      return;
    }
    for (auto& [name, ket] : read_kets(rd, e, p, dim)) {
      ops.push_back(projector(ket));
      names.push_back(name);
    }
  };
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) one(j[i], Reader::at(path, i));
  } else {
    one(j, path);
  }
}

void read_classical_boundary(Reader& rd, const Json& j, const std::string& path, std::size_t dim,
                             bool effects, std::vector<Eigen::VectorXd>& vecs,
                             std::vector<std::string>& names) {
  const auto d = static_cast<Eigen::Index>(dim);
  auto one = [&](const Json& e, const std::string& p) {
    if (e.is_string()) {
      const auto s = e.get<std::string>();
      if (s == "ic" || s == "points") {
        for (std::size_t i = 0; i < dim; ++i) {
          vecs.push_back(Eigen::VectorXd::Unit(d, static_cast<Eigen::Index>(i)));
          names.push_back((effects ? "read" : "point") + std::to_string(i));
        }
      } else if (s == "unit" && effects) {
        vecs.push_back(Eigen::VectorXd::Ones(d));
        names.push_back("unit");
      } else if (s == "uniform" && !effects) {
        vecs.push_back(Eigen::VectorXd::Constant(d, 1.0 / double(dim)));
        names.push_back("uniform");
      } else {
        rd.issue(p, "unknown family \"" + s + "\"");
      }
      return;
    }
    const char* key = effects ? "response" : "distribution";
    if (!rd.object(e, p, {"name", key})) return;
    const auto name = rd.string(rd.field(e, p, "name", false), Reader::join(p, "name"));
    if (const auto v = rd.real_vector(rd.field(e, p, key, true), Reader::join(p, key), dim)) {
      vecs.push_back(*v);
      names.push_back(name.value_or(std::string(key) + std::to_string(vecs.size() - 1)));
    }
  };
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) one(j[i], Reader::at(path, i));
  } else {
    one(j, path);
  }
}

CMatrix named_gate(const std::string& g) {
  using namespace std::complex_literals;
  CMatrix u(2, 2);
  const double h = 1.0 / std::sqrt(2.0);
  if (g == "I") u << 1, 0, 0, 1;
  else if (g == "X") u << 0, 1, 1, 0;
  else if (g == "Y") u << 0, -1i, 1i, 0;
  else if (g == "Z") u << 1, 0, 0, -1;
  else if (g == "H") u << h, h, h, -h;
  else if (g == "S") u << 1, 0, 0, 1i;
  else if (g == "T") u << 1, 0, 0, std::exp(1i * std::numbers::pi / 4.0);
  else return CMatrix();
  return u;
}

void read_quantum_instruments(Reader& rd, const Json& list, const std::string& path, std::size_t dim,
                              std::vector<QuantumAction>& actions) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& ins = list[i];
    const auto p = Reader::at(path, i);
    const auto family = rd.string(rd.field(ins, p, "family", true), Reader::join(p, "family"));
    if (!family) continue;
    if (*family == "polariser") {
      if (!rd.object(ins, p, {"family", "angles"})) continue;
      if (dim != 2) {
        rd.issue(p, "polarisers act on qubits");
        continue;
      }
      const Json* angles = rd.field(ins, p, "angles", true);
      if (!rd.array(angles, Reader::join(p, "angles"))) continue;
      for (std::size_t k = 0; k < angles->size(); ++k)
        if (const auto a = rd.number(&(*angles)[k], Reader::at(Reader::join(p, "angles"), k)))
          actions.push_back(polariser(*a));
    } else if (*family == "measure_prepare") {
      if (!rd.object(ins, p, {"family", "tests", "prepares"})) continue;
      const Json* tests = rd.field(ins, p, "tests", true);
      const Json* prepares = rd.field(ins, p, "prepares", true);
      if (!tests || !prepares) continue;
      const auto t = read_kets(rd, *tests, Reader::join(p, "tests"), dim);
      const auto q = read_kets(rd, *prepares, Reader::join(p, "prepares"), dim);
      for (const auto& [tn, tk] : t)
        for (const auto& [qn, qk] : q) actions.push_back(measure_prepare(tk, qk, tn + ">" + qn));
    } else if (*family == "unitary") {
      if (!rd.object(ins, p, {"family", "gates", "name", "matrix"})) continue;
      if (const Json* gates = rd.field(ins, p, "gates", false)) {
        if (!rd.array(gates, Reader::join(p, "gates"))) continue;
        for (std::size_t k = 0; k < gates->size(); ++k) {
          const auto gp = Reader::at(Reader::join(p, "gates"), k);
          const auto g = rd.string(&(*gates)[k], gp);
          if (!g) continue;
          const CMatrix u = named_gate(*g);
          if (u.size() == 0 || dim != 2) {
            rd.issue(gp, "unknown qubit gate \"" + *g + "\"");
            continue;
          }
          actions.push_back(unitary_action(u, *g));
        }
      } else if (const auto m = rd.cmatrix(rd.field(ins, p, "matrix", true), Reader::join(p, "matrix"))) {
        const auto name = rd.string(rd.field(ins, p, "name", false), Reader::join(p, "name"));
        actions.push_back(unitary_action(*m, name.value_or("U")));
      }
    } else if (*family == "kraus") {
      if (!rd.object(ins, p, {"family", "name", "outcomes"})) continue;
      QuantumAction a;
      a.name = rd.string(rd.field(ins, p, "name", true), Reader::join(p, "name")).value_or("");
      const Json* outcomes = rd.field(ins, p, "outcomes", true);
      if (!rd.array(outcomes, Reader::join(p, "outcomes"))) continue;
      for (std::size_t k = 0; k < outcomes->size(); ++k) {
        const auto op = Reader::at(Reader::join(p, "outcomes"), k);
        const auto& o = (*outcomes)[k];
        if (!rd.object(o, op, {"name", "operators"})) continue;
        a.outcome_names.push_back(
            rd.string(rd.field(o, op, "name", true), Reader::join(op, "name")).value_or(""));
        a.kraus.emplace_back();
        const Json* ops = rd.field(o, op, "operators", true);
        if (!rd.array(ops, Reader::join(op, "operators"))) continue;
        for (std::size_t m = 0; m < ops->size(); ++m)
          if (const auto k_op = rd.cmatrix(&(*ops)[m], Reader::at(Reader::join(op, "operators"), m)))
            a.kraus.back().push_back(*k_op);
      }
      actions.push_back(std::move(a));
    } else {
      rd.issue(Reader::join(p, "family"), "unknown quantum instrument family \"" + *family + "\"");
    }
  }
}

void read_classical_instruments(Reader& rd, const Json& list, const std::string& path,
                                std::size_t dim, std::vector<ClassicalAction>& actions) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& ins = list[i];
    const auto p = Reader::at(path, i);
    const auto family = rd.string(rd.field(ins, p, "family", true), Reader::join(p, "family"));
    if (!family) continue;
    if (*family == "read_write") {
      if (!rd.object(ins, p, {"family", "writes"})) continue;
      const Json* writes = rd.field(ins, p, "writes", false);
      if (!writes || (writes->is_string() && *writes == "all")) {
        for (std::size_t w = 0; w < dim; ++w) actions.push_back(read_write(dim, w));
      } else if (rd.array(writes, Reader::join(p, "writes"))) {
        for (std::size_t k = 0; k < writes->size(); ++k) {
          const auto w = rd.unsigned_int(&(*writes)[k], Reader::at(Reader::join(p, "writes"), k));
          if (w && *w >= dim)
            rd.issue(Reader::at(Reader::join(p, "writes"), k), "symbol out of range");
          else if (w)
            actions.push_back(read_write(dim, *w));
        }
      }
    } else if (*family == "read_through") {
      if (rd.object(ins, p, {"family"})) actions.push_back(read_through(dim));
    } else if (*family == "stochastic") {
      if (!rd.object(ins, p, {"family", "name", "outcomes"})) continue;
      ClassicalAction a;
      a.name = rd.string(rd.field(ins, p, "name", true), Reader::join(p, "name")).value_or("");
      const Json* outcomes = rd.field(ins, p, "outcomes", true);
      if (!rd.array(outcomes, Reader::join(p, "outcomes"))) continue;
      for (std::size_t k = 0; k < outcomes->size(); ++k) {
        const auto op = Reader::at(Reader::join(p, "outcomes"), k);
        const auto& o = (*outcomes)[k];
        if (!rd.object(o, op, {"name", "transition"})) continue;
        a.outcome_names.push_back(
            rd.string(rd.field(o, op, "name", true), Reader::join(op, "name")).value_or(""));
        if (const auto m = rd.cmatrix(rd.field(o, op, "transition", true), Reader::join(op, "transition")))
          a.transitions.push_back(m->real());
      }
      actions.push_back(std::move(a));
    } else {
      rd.issue(Reader::join(p, "family"), "unknown classical instrument family \"" + *family + "\"");
    }
  }
}

struct SystemDecl {
  std::string name;
  std::size_t dim = 0;
};

struct RegionDecl {
  std::string name;
  std::size_t system = 0;
  const Json* instruments = nullptr;
  std::string path;
};

}  // namespace

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot read scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

Scenario parse_scenario_text(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t k = 0; k < e.byte && k < text.size(); ++k) line += text[k] == '\n';
    throw SchemaErrors({{"", line, std::string("invalid JSON: ") + e.what()}});
  }
  Reader rd(text);
  Scenario sc;
  if (!rd.object(root, "", {"format_version", "name", "description", "theory", "seed", "systems",
                            "regions", "exterior", "composites", "adjacency", "heralds",
                            "tolerances", "caps", "checks"}))
    throw SchemaErrors(rd.issues);

  if (const auto v = rd.unsigned_int(rd.field(root, "", "format_version", true), "format_version");
      v && *v != kScenarioFormatVersion)
    rd.issue("format_version", "unsupported format_version " + std::to_string(*v));
  sc.name = rd.string(rd.field(root, "", "name", true), "name").value_or("");
  rd.string(rd.field(root, "", "description", false), "description");
  sc.theory = rd.string(rd.field(root, "", "theory", true), "theory").value_or("");
  if (!sc.theory.empty() && sc.theory != "classical" && sc.theory != "quantum")
    rd.issue("theory", "theory must be \"classical\" or \"quantum\"");
  const bool quantum = sc.theory == "quantum";
  sc.seed = rd.unsigned_int(rd.field(root, "", "seed", false), "seed").value_or(0);

  // systems
  std::vector<SystemDecl> systems;
  if (const Json* js = rd.field(root, "", "systems", true); rd.array(js, "systems")) {
    for (std::size_t i = 0; i < js->size(); ++i) {
      const auto p = Reader::at("systems", i);
      if (!rd.object((*js)[i], p, {"name", "dim"})) continue;
      SystemDecl s;
      s.name = rd.string(rd.field((*js)[i], p, "name", true), Reader::join(p, "name")).value_or("");
      s.dim = rd.unsigned_int(rd.field((*js)[i], p, "dim", true), Reader::join(p, "dim")).value_or(0);
      if (s.dim < 1 || s.dim > 8) rd.issue(Reader::join(p, "dim"), "dimension must lie in 1..8");
      for (const auto& o : systems)
        if (o.name == s.name) rd.issue(Reader::join(p, "name"), "duplicate system \"" + s.name + "\"");
      systems.push_back(s);
    }
  }
  auto find_system = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < systems.size(); ++i)
      if (systems[i].name == name) return i;
    return std::nullopt;
  };

  // regions
  std::vector<RegionDecl> regions;
  if (const Json* jr = rd.field(root, "", "regions", true); rd.array(jr, "regions")) {
    for (std::size_t i = 0; i < jr->size(); ++i) {
      const auto p = Reader::at("regions", i);
      const auto& r = (*jr)[i];
      if (!rd.object(r, p, {"name", "system", "instruments"})) continue;
      RegionDecl d;
      d.path = p;
      d.name = rd.string(rd.field(r, p, "name", true), Reader::join(p, "name")).value_or("");
      for (const auto& o : regions)
        if (o.name == d.name) rd.issue(Reader::join(p, "name"), "duplicate region \"" + d.name + "\"");
      const auto sys = rd.string(rd.field(r, p, "system", true), Reader::join(p, "system"));
      if (sys) {
        if (const auto s = find_system(*sys)) d.system = *s;
        else rd.issue(Reader::join(p, "system"), "undeclared system \"" + *sys + "\"");
      }
      d.instruments = rd.field(r, p, "instruments", true);
      if (rd.array(d.instruments, Reader::join(p, "instruments")) && d.instruments->empty())
        rd.issue(Reader::join(p, "instruments"), "at least one instrument required");
      regions.push_back(d);
    }
    if (jr->empty()) rd.issue("regions", "at least one region required");
  }
  auto find_region = [&](const std::string& name) -> std::optional<LocationId> {
    for (std::size_t i = 0; i < regions.size(); ++i)
      if (regions[i].name == name) return static_cast<LocationId>(i);
    return std::nullopt;
  };

  // exterior
  const Json* ext = rd.field(root, "", "exterior", false);
  const Json* ext_preps = nullptr;
  const Json* ext_effects = nullptr;
  const Json* conditioning = nullptr;
  if (ext && rd.object(*ext, "exterior", {"preparations", "effects", "conditioning"})) {
    ext_preps = rd.field(*ext, "exterior", "preparations", false);
    ext_effects = rd.field(*ext, "exterior", "effects", false);
    conditioning = rd.field(*ext, "exterior", "conditioning", false);
    for (const auto& [key, j] : {std::pair{"preparations", ext_preps}, std::pair{"effects", ext_effects},
                                 std::pair{"conditioning", conditioning}}) {
      if (!j) continue;
      const auto p = Reader::join("exterior", key);
      if (!j->is_object()) {
        rd.issue(p, "expected an object keyed by name");
        continue;
      }
      for (const auto& [name, value] : j->items()) {
        const bool known = std::string(key) == "conditioning" ? find_region(name).has_value()
                                                              : find_system(name).has_value();
        if (!known)
          rd.issue(Reader::join(p, name), std::string("undeclared ") +
                                              (std::string(key) == "conditioning" ? "region" : "system") +
                                              " \"" + name + "\"");
      }
    }
  }
  auto boundary_spec = [&](const Json* table, const std::string& system) -> Json {
    if (table && table->is_object() && table->contains(system)) return table->at(system);
    return Json("ic");
  };

  // tolerances, caps, checks
  if (const Json* t = rd.field(root, "", "tolerances", false);
      t && rd.object(*t, "tolerances", {"rank", "residual", "herald"})) {
    sc.rank_tol = rd.number(rd.field(*t, "tolerances", "rank", false), "tolerances.rank").value_or(sc.rank_tol);
    sc.residual_tol =
        rd.number(rd.field(*t, "tolerances", "residual", false), "tolerances.residual").value_or(sc.residual_tol);
    sc.herald_tol =
        rd.number(rd.field(*t, "tolerances", "herald", false), "tolerances.herald").value_or(sc.herald_tol);
    for (double v : {sc.rank_tol, sc.residual_tol, sc.herald_tol})
      if (!(v > 0.0)) rd.issue("tolerances", "tolerances must be positive");
  }
  if (const Json* c = rd.field(root, "", "caps", false); c && rd.object(*c, "caps", {"table_entries"}))
    sc.table_cap = rd.unsigned_int(rd.field(*c, "caps", "table_entries", false), "caps.table_entries")
                       .value_or(sc.table_cap);
  if (const Json* c = rd.field(root, "", "checks", false);
      c && rd.object(*c, "checks", {"span", "order_symmetry", "reconstruction"})) {
    sc.span_check = rd.boolean(rd.field(*c, "checks", "span", false), "checks.span").value_or(true);
    sc.order_symmetry =
        rd.boolean(rd.field(*c, "checks", "order_symmetry", false), "checks.order_symmetry").value_or(true);
    sc.reconstruction =
        rd.boolean(rd.field(*c, "checks", "reconstruction", false), "checks.reconstruction").value_or(true);
  }
  sc.adjacency = rd.boolean(rd.field(root, "", "adjacency", false), "adjacency").value_or(false);

  // composites
  if (const Json* jc = rd.field(root, "", "composites", false); rd.array(jc, "composites")) {
    for (std::size_t i = 0; i < jc->size(); ++i) {
      const auto p = Reader::at("composites", i);
      if (!rd.array(&(*jc)[i], p)) continue;
      std::vector<Region> parts;
      for (std::size_t k = 0; k < (*jc)[i].size(); ++k) {
        const auto name = rd.string(&(*jc)[i][k], Reader::at(p, k));
        if (!name) continue;
        if (const auto x = find_region(*name)) parts.push_back(Region::single(*x));
        else rd.issue(Reader::at(p, k), "undeclared region \"" + *name + "\"");
      }
      if (parts.size() != (*jc)[i].size()) continue;
      try {
        sc.composites.emplace_back(parts);
      } catch (const Error& e) {
        rd.issue(p, e.what());
      }
    }
  }

  // heralds (names resolved after the backend exists)
  if (const Json* jh = rd.field(root, "", "heralds", false); rd.array(jh, "heralds")) {
    for (std::size_t i = 0; i < jh->size(); ++i) {
      const auto p = Reader::at("heralds", i);
      const auto& h = (*jh)[i];
      if (!rd.object(h, p, {"name", "target", "given", "procedures"})) continue;
      HeraldSpec spec;
      spec.name = rd.string(rd.field(h, p, "name", true), Reader::join(p, "name")).value_or("");
      spec.target = rd.string(rd.field(h, p, "target", true), Reader::join(p, "target")).value_or("");
      if (const Json* g = rd.field(h, p, "given", false); rd.array(g, Reader::join(p, "given")))
        for (std::size_t k = 0; k < g->size(); ++k)
          if (const auto s = rd.string(&(*g)[k], Reader::at(Reader::join(p, "given"), k)))
            spec.given.push_back(*s);
      if (const Json* pr = rd.field(h, p, "procedures", false)) {
        if (!pr->is_object()) {
          rd.issue(Reader::join(p, "procedures"), "expected an object region -> action");
        } else {
          for (const auto& [region, action] : pr->items())
            if (const auto s = rd.string(&action, Reader::join(Reader::join(p, "procedures"), region)))
              spec.procedures[region] = *s;
        }
      }
      sc.heralds.push_back(std::move(spec));
    }
  }

  if (!rd.issues.empty()) throw SchemaErrors(rd.issues);

  // Backend.
  std::unique_ptr<TheoryBackend> backend;
  try {
    if (quantum) {
      QuantumSpec spec;
      for (const auto& s : systems) {
        QuantumWire w;
        w.name = s.name;
        w.dim = s.dim;
        read_quantum_boundary(rd, boundary_spec(ext_preps, s.name), "exterior.preparations." + s.name,
                              s.dim, false, w.preparations, w.preparation_names);
        read_quantum_boundary(rd, boundary_spec(ext_effects, s.name), "exterior.effects." + s.name,
                              s.dim, true, w.effects, w.effect_names);
        spec.wires.push_back(std::move(w));
      }
      for (const auto& r : regions) {
        QuantumLocation l;
        l.name = r.name;
        l.wire = r.system;
        read_quantum_instruments(rd, *r.instruments, Reader::join(r.path, "instruments"),
                                 systems[r.system].dim, l.actions);
        spec.locations.push_back(std::move(l));
      }
      if (!rd.issues.empty()) throw SchemaErrors(rd.issues);
      backend = std::make_unique<QuantumBackend>(std::move(spec));
    } else {
      ClassicalSpec spec;
      for (const auto& s : systems) {
        ClassicalWire w;
        w.name = s.name;
        w.dim = s.dim;
        read_classical_boundary(rd, boundary_spec(ext_preps, s.name), "exterior.preparations." + s.name,
                                s.dim, false, w.preparations, w.preparation_names);
        read_classical_boundary(rd, boundary_spec(ext_effects, s.name), "exterior.effects." + s.name,
                                s.dim, true, w.effects, w.effect_names);
        spec.wires.push_back(std::move(w));
      }
      for (const auto& r : regions) {
        ClassicalLocation l;
        l.name = r.name;
        l.wire = r.system;
        read_classical_instruments(rd, *r.instruments, Reader::join(r.path, "instruments"),
                                   systems[r.system].dim, l.actions);
        spec.locations.push_back(std::move(l));
      }
      if (!rd.issues.empty()) throw SchemaErrors(rd.issues);
      backend = std::make_unique<ClassicalBackend>(std::move(spec));
    }
  } catch (const SchemaErrors&) {
    throw;
  } catch (const Error& e) {
    rd.issue("regions", e.what());
    throw SchemaErrors(rd.issues);
  }

  // Conditioning labels.
  if (conditioning && conditioning->is_object()) {
    for (const auto& [name, value] : conditioning->items()) {
      const auto p = "exterior.conditioning." + name;
      const LocationId x = *find_region(name);
      if (value.is_string() && value == "all") continue;
      if (!value.is_array() || value.empty()) {
        rd.issue(p, "expected \"all\" or a non-empty list of labels");
        continue;
      }
      std::vector<std::size_t> labels;
      for (std::size_t k = 0; k < value.size(); ++k) {
        try {
          const std::string text = value[k].is_string() ? value[k].get<std::string>()
                                                        : std::to_string(value[k].get<long long>());
          labels.push_back(parse_term(backend->layout(), name + ":" + text).label);
        } catch (const std::exception& e) {
          rd.issue(Reader::at(p, k), e.what());
        }
      }
      std::sort(labels.begin(), labels.end());
      labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
      backend->mutable_layout().set_exterior_labels(x, std::move(labels));
    }
  }
  for (std::size_t i = 0; i < sc.heralds.size(); ++i) {
    try {
      make_query(backend->layout(), sc.heralds[i]);
    } catch (const Error& e) {
      rd.issue(Reader::at("heralds", i), e.what());
    }
  }
  if (!rd.issues.empty()) throw SchemaErrors(rd.issues);
  sc.backend = std::move(backend);
  return sc;
}

LocationId parse_location(const Layout& layout, const std::string& name) {
  if (const auto x = layout.find(name)) return *x;
  fail(ErrorCode::SchemaError, "undeclared region \"" + name + "\"");
}

ActionId parse_action(const Layout& layout, LocationId x, const std::string& text) {
  const auto& actions = layout.location(x).actions;
  for (std::size_t a = 0; a < actions.size(); ++a)
    if (actions[a].name == text) return static_cast<ActionId>(a);
  if (!text.empty() && text.find_first_not_of("0123456789") == std::string::npos) {
    const auto a = std::stoull(text);
    if (a < actions.size()) return static_cast<ActionId>(a);
  }
  fail(ErrorCode::UnknownProcedure, "region " + layout.location(x).name + " has no action \"" + text + "\"");
}

HeraldTerm parse_term(const Layout& layout, const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos)
    fail(ErrorCode::SchemaError, "expected region:label, got \"" + text + "\"");
  const LocationId x = parse_location(layout, text.substr(0, colon));
  const std::string label = text.substr(colon + 1);
  const std::size_t n = layout.num_labels(x);
  if (!label.empty() && label.find_first_not_of("0123456789") == std::string::npos) {
    const auto idx = std::stoull(label);
    if (idx >= n)
      fail(ErrorCode::UnknownLabel, "label " + label + " out of range for " + text.substr(0, colon));
    return {Region::single(x), static_cast<std::size_t>(idx)};
  }
  const auto slash = label.rfind('/');
  if (slash == std::string::npos)
    fail(ErrorCode::SchemaError, "label must be an index or action/outcome, got \"" + label + "\"");
  const ActionId a = parse_action(layout, x, label.substr(0, slash));
  const auto& outcomes = layout.location(x).actions[a].outcomes;
  for (std::size_t s = 0; s < outcomes.size(); ++s)
    if (outcomes[s] == label.substr(slash + 1))
      return {Region::single(x), layout.label_index(x, {a, static_cast<OutcomeId>(s)})};
  fail(ErrorCode::UnknownLabel, "no outcome \"" + label.substr(slash + 1) + "\" for " + text);
}

HeraldQuery make_query(const Layout& layout, const HeraldSpec& spec) {
  HeraldQuery q;
  q.target = parse_term(layout, spec.target);
  for (const auto& g : spec.given) q.conditions.push_back(parse_term(layout, g));
  for (const auto& [region, action] : spec.procedures) {
    const LocationId x = parse_location(layout, region);
    q.procedures[x] = parse_action(layout, x, action);
  }
  std::vector<Region> named{q.target.region};
  for (const auto& c : q.conditions) {
    for (const auto& r : named)
      if (r.intersects(c.region))
        fail(ErrorCode::SchemaError, "herald names region " + c.region.to_string() + " twice");
    named.push_back(c.region);
  }
  return q;
}

}  // namespace causaloid
