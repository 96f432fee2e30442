#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "causaloid/diagram.hpp"
#include "causaloid/error.hpp"
#include "causaloid/report.hpp"
#include "causaloid/scenario.hpp"
#include "causaloid/serialize.hpp"
#include "support.hpp"

using namespace causaloid;
namespace ts = testing_support;
namespace fs = std::filesystem;

namespace {

std::string scenario_path(const std::string& name) {
  return std::string(CAUSALOID_SCENARIO_DIR) + "/" + name + ".json";
}

const char* kMinimal = R"({
  "format_version": 1,
  "name": "tiny",
  "theory": "classical",
  "systems": [{"name": "bit", "dim": 2}],
  "regions": [{"name": "C", "system": "bit", "instruments": [{"family": "read_write", "writes": "all"}]}]
})";

std::string with_line(std::string text, const std::string& after, const std::string& insert) {
  const auto at = text.find(after);
  REQUIRE(at != std::string::npos);
  text.insert(at + after.size(), insert);
  return text;
}

fs::path temp_file(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("causaloid_test_" + name);
  std::ofstream(p) << text;
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + CAUSALOID_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Statement-level DOT check: a digraph header, node/edge/attribute/rank
// statements one per line, a closing brace and quoted labels that close.
bool looks_like_dot(const std::string& text) {
  static const std::regex header(R"re(^digraph "[^"]*" \{$)re");
  static const std::regex node(R"re(^  n\d+ \[("[^"]*"|[^\[\]"])*\];$)re");
  static const std::regex edge(R"re(^  n\d+ -> n\d+ \[("[^"]*"|[^\[\]"])*\];$)re");
  static const std::regex attr(R"re(^  (rankdir=\w+|node \[("[^"]*"|[^\[\]"])*\]);$)re");
  static const std::regex rank(R"re(^  \{ rank=same;( n\d+;)+ \}$)re");
  std::istringstream in(text);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  if (lines.size() < 2 || !std::regex_match(lines.front(), header) || lines.back() != "}") return false;
  for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
    const auto& l = lines[i];
    if (std::count(l.begin(), l.end(), '"') % 2) return false;
    if (!std::regex_match(l, node) && !std::regex_match(l, edge) && !std::regex_match(l, attr) &&
        !std::regex_match(l, rank))
      return false;
  }
  return true;
}

std::size_t count_kind(const DiagramScene& s, NodeKind k) {
  return static_cast<std::size_t>(
      std::count_if(s.nodes.begin(), s.nodes.end(), [&](const DiagramNode& n) { return n.kind == k; }));
}

}  // namespace

TEST_CASE("scenario parsing") {
  const Scenario sc = parse_scenario_text(kMinimal);
  CHECK(sc.name == "tiny");
  CHECK(sc.theory == "classical");
  REQUIRE(sc.backend);
  CHECK(sc.backend->layout().num_locations() == 1);
  CHECK(sc.rank_tol == 1e-9);

  // unknown key on line 4
  const std::string typo = with_line(kMinimal, "\"tiny\",", "\n  \"colour\": 3,");
  try {
    parse_scenario_text(typo);
    FAIL("expected SchemaErrors");
  } catch (const SchemaErrors& e) {
    CHECK(e.code() == ErrorCode::SchemaError);
    REQUIRE(e.issues().size() == 1);
    CHECK(e.issues()[0].path == "colour");
    CHECK(e.issues()[0].line == 4);
    CHECK(std::string(e.what()).find("colour") != std::string::npos);
  }

  // composites naming an undeclared region
  const std::string ghost = with_line(kMinimal, "\"tiny\",", "\n  \"composites\": [[\"C\", \"D\"]],");
  try {
    parse_scenario_text(ghost);
    FAIL("expected SchemaErrors");
  } catch (const SchemaErrors& e) {
    CHECK(std::string(e.what()).find("undeclared region \"D\"") != std::string::npos);
  }

  // several problems are all reported
  std::string many = kMinimal;
  many.replace(many.find("\"dim\": 2"), 8, "\"dim\": 99");
  many = with_line(many, "\"tiny\",", "\n  \"seeed\": 1,");
  try {
    parse_scenario_text(many);
    FAIL("expected SchemaErrors");
  } catch (const SchemaErrors& e) {
    CHECK(e.issues().size() >= 2);
  }

  CHECK_THROWS_AS(parse_scenario_text("{ not json"), SchemaErrors);
  try {
    parse_scenario("/nonexistent/scenario.json");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

TEST_CASE("herald terms by name and by index") {
  const auto chain = ts::polariser_chain(2, {0, 30, 60, 90});
  const auto t = parse_term(chain.layout(), "P2:pol30/absorb");
  CHECK(t.region == Region({1}));
  CHECK(t.label == chain.layout().label_index(1, {1, 1}));
  CHECK(parse_term(chain.layout(), "P2:3").label == 3);
  CHECK_THROWS_AS(parse_term(chain.layout(), "P9:0"), Error);
  CHECK_THROWS_AS(parse_term(chain.layout(), "P1"), Error);
  CHECK_THROWS_AS(parse_term(chain.layout(), "P1:pol45/pass"), Error);
}

TEST_CASE("hex floats and digests") {
  for (const double v : {0.0, -0.0, 1.0, 0.1, -3.5e-300, 1.0 / 3.0, 6.02214076e23}) {
    const double back = parse_hex_float(hex_float(v));
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
  CHECK_THROWS_AS(parse_hex_float("0x1.zzp+0"), Error);

  Eigen::MatrixXd m(2, 3);
  m << 1, 0.1, -2, 1.0 / 3.0, 0, 5e-17;
  CHECK(matrix_from_json(matrix_to_json(m)) == m);
  const auto d = matrix_digest(m);
  CHECK(d.size() == 64);
  CHECK(d == matrix_digest(Eigen::MatrixXd(m)));
  Eigen::MatrixXd nudged = m;
  nudged(1, 0) = std::nextafter(nudged(1, 0), 1.0);
  CHECK(matrix_digest(nudged) != d);
  // shape is part of the digest
  const Eigen::MatrixXd flat = Eigen::Map<Eigen::MatrixXd>(m.data(), 3, 2);
  CHECK(matrix_digest(flat) != d);
}

TEST_CASE("causaloid serialization round trip") {
  const auto chain = ts::polariser_chain(3, {0, 30, 60, 90});
  const std::vector<CompositeRegion> comps{CompositeRegion({Region({0}), Region({1})}),
                                           CompositeRegion({Region({0}), Region({1}), Region({2})})};
  const auto build = build_causaloid(chain, comps);
  const Json j = causaloid_to_json(build.causaloid);
  const Causaloid back = causaloid_from_json(Json::parse(j.dump()));
  CHECK(causaloid_to_json(back).dump() == j.dump());
  for (const auto& [x, e] : build.causaloid.elementary_entries()) {
    CHECK(back.elementary(x).lambda.matrix == e.lambda.matrix);
    CHECK(back.omega(x).indices == e.lambda.omega.indices);
  }
  for (const auto& [r, e] : build.causaloid.composite_entries()) {
    REQUIRE(back.stores(r));
    CHECK(back.composite(r).matrix == build.causaloid.composite(r).matrix);
  }

  // a corrupted unit row is refused
  Json bad = j;
  const auto fid = bad["elementary"][0]["omega"][0].get<std::size_t>();
  const auto cols = bad["elementary"][0]["lambda"]["cols"].get<std::size_t>();
  bad["elementary"][0]["lambda"]["data"][fid * cols] = hex_float(0.5);
  try {
    causaloid_from_json(bad);
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaError);
  }

  Json wrong = j;
  wrong["format_version"] = 99;
  CHECK_THROWS_AS(causaloid_from_json(wrong), Error);
}

TEST_CASE("diagram scenes") {
  const auto chain = ts::polariser_chain(2, {0, 30, 60, 90});
  const std::vector<CompositeRegion> comps{CompositeRegion({Region({0}), Region({1})})};
  const auto build = build_causaloid(chain, comps);
  const auto& c = build.causaloid;

  const auto born = make_scene(c, "born:P1");
  born.check();
  CHECK(count_kind(born, NodeKind::Circle) == 2);
  CHECK(count_kind(born, NodeKind::Dot) == 1);
  CHECK(count_kind(born, NodeKind::Hybrid) == 0);
  std::size_t alpha = 0;
  for (const auto& w : born.wires) alpha += w.from_set.symbol == 'a';
  CHECK(alpha == 1);
  for (const auto& w : born.wires) {
    CHECK(w.from_set == w.to_set);
    if (w.from_set.symbol == 'a') CHECK(w.from_set.size == 8);
    if (w.from_set.symbol == 'l') CHECK(w.from_set.size == 5);
  }

  const auto tomo = make_scene(c, "tomographic:P2");
  tomo.check();
  CHECK(count_kind(tomo, NodeKind::Dot) == 1);

  const auto prod = make_scene(c, "product:P1,P2");
  prod.check();
  CHECK(count_kind(prod, NodeKind::Hybrid) == 1);
  bool k_wire = false;
  for (const auto& w : prod.wires)
    if (w.from_set.symbol == 'k') {
      k_wire = true;
      CHECK(w.from_set.size == 9);
    }
  CHECK(k_wire);

  DiagramScene broken = prod;
  broken.wires[0].to_set.size += 1;
  CHECK_THROWS_AS(broken.check(), Error);

  for (const auto& expr : {"born:P1", "tomographic:P2", "product:P1,P2", "born:P1+P2"}) {
    const auto dot = emit_diagram(c, expr, "dot");
    CHECK_MESSAGE(looks_like_dot(dot), std::string(expr));
    const auto svg = emit_diagram(c, expr, "svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
  }

  for (const auto& expr : {"born:P7", "tomographic:", "product:P1", "sideways:P1"}) {
    try {
      make_scene(c, expr);
      FAIL("expected UnknownEntry for " << expr);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownEntry);
    }
  }
}

TEST_CASE("pipeline on shipped scenarios") {
  const auto qubit = run_pipeline(parse_scenario(scenario_path("qubit_channel")));
  CHECK(qubit.report["regions"][0]["omega_size"] == 16);
  CHECK(qubit.report["regions"][0]["reconstruction_max_error"].get<double>() <= 1e-8);

  const auto gates = run_pipeline(parse_scenario(scenario_path("adjacent_gates")));
  CHECK(gates.report["composites"][0]["omega_size"] == 16);
  CHECK(gates.report["composites"][0]["product_size"] == 256);
  CHECK(gates.report["adjacency"]["edges"].size() == 1);

  const auto pol = run_pipeline(parse_scenario(scenario_path("polariser_chain")));
  const auto& h = pol.report["heralds"];
  REQUIRE(h.size() == 2);
  CHECK(h[0]["well_defined"] == true);
  CHECK(std::abs(h[0]["p"].get<double>() - ts::malus_chain_conditional(0, 30, 60)) <= 1e-8);
  CHECK(h[1]["well_defined"] == false);
  CHECK(h[1]["p"].is_null());
  CHECK(h[1]["witness"]["high"]["conditional"].get<double>() -
            h[1]["witness"]["low"]["conditional"].get<double>() >
        0.1);
  CHECK_FALSE(pol.all_heralds_well_defined);
}

TEST_CASE("reports and diagrams are byte-identical across runs") {
  const Scenario sc = parse_scenario(scenario_path("polariser_chain"));
  PipelineOptions full;
  full.full_matrices = true;
  const auto a = run_pipeline(sc, full);
  const auto b = run_pipeline(parse_scenario(scenario_path("polariser_chain")), full);
  CHECK(dump_report(a.report) == dump_report(b.report));
  CHECK(causaloid_to_json(a.build.causaloid).dump() == causaloid_to_json(b.build.causaloid).dump());
  for (const auto& fmt : {"dot", "svg"})
    CHECK(emit_diagram(a.build.causaloid, "product:P1,P2", fmt) ==
          emit_diagram(b.build.causaloid, "product:P1,P2", fmt));
  const auto text = dump_report(a.report);
  CHECK(text.back() == '\n');
}

TEST_CASE("command-line exit codes") {
  const std::string pol = "--scenario \"" + scenario_path("polariser_chain") + "\"";
  CHECK(run_cli("compress " + pol) == 0);
  CHECK(run_cli("validate " + pol) == 0);
  CHECK(run_cli("diagram " + pol + " --expr product:P1,P2 --format svg") == 0);
  CHECK(run_cli("herald " + pol + " --target P2:pol30/pass --given P1:pol0/pass,P3:pol60/pass --require-herald") == 0);
  CHECK(run_cli("herald " + pol + " --target P3:pol60/pass --given P1:pol0/pass --require-herald") == 4);
  CHECK(run_cli("herald " + pol + " --target P3:pol60/pass --given P1:pol0/pass") == 0);
  CHECK(run_cli("compress " + pol + " --require-herald") == 4);
  CHECK(run_cli("diagram " + pol + " --expr born:P9") == 2);
  CHECK(run_cli("compress --scenario /nonexistent.json") == 2);
  CHECK(run_cli("frobnicate") == 2);

  const auto typo = temp_file("typo.json", with_line(kMinimal, "\"tiny\",", "\n  \"colour\": 3,"));
  CHECK(run_cli("compress --scenario \"" + typo.string() + "\"") == 2);

  const auto deficient = temp_file("deficient.json", R"({
    "format_version": 1, "name": "deficient", "theory": "quantum",
    "systems": [{"name": "q", "dim": 2}],
    "regions": [{"name": "A", "system": "q",
                 "instruments": [{"family": "measure_prepare", "tests": "ic", "prepares": "ic"}]}],
    "exterior": {"preparations": {"q": "points"}, "effects": {"q": "ic"}}
  })");
  CHECK(run_cli("validate --scenario \"" + deficient.string() + "\"") == 3);
  CHECK(run_cli("compress --scenario \"" + deficient.string() + "\"") == 3);
  fs::remove(typo);
  fs::remove(deficient);
}
