// causaloid: command-line front end for the compression pipeline.
//
// Exit status: 0 success, 2 schema or input error, 3 numerical failure,
// 4 herald not well-defined under --require-herald.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "causaloid/diagram.hpp"
#include "causaloid/error.hpp"
#include "causaloid/report.hpp"
#include "causaloid/scenario.hpp"
#include "causaloid/serialize.hpp"

using namespace causaloid;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitHerald = 4;

struct Common {
  std::string scenario;
  std::string out;
  std::optional<double> tol_rank;
  std::optional<double> tol_herald;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--scenario", c.scenario, "Scenario JSON file")->required();
  cmd->add_option("--out", c.out, "Output file (default: stdout)");
  cmd->add_option("--tol-rank", c.tol_rank, "Relative rank tolerance");
  cmd->add_option("--tol-herald", c.tol_herald, "Heralding parallelism tolerance");
  cmd->add_option("--seed", c.seed, "Seed for the extended exterior sets");
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << text;
}

PipelineOptions pipeline_options(const Common& c, bool full = false) {
  PipelineOptions o;
  o.full_matrices = full;
  o.rank_tol = c.tol_rank;
  o.herald_tol = c.tol_herald;
  o.seed = c.seed;
  return o;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causaloid compression toolkit"};
  app.require_subcommand(1);

  Common compress_opts;
  bool full_matrices = false;
  bool compress_require = false;
  std::string causaloid_out;
  auto* compress = app.add_subcommand("compress", "Run the full pipeline and write a JSON report");
  add_common(compress, compress_opts);
  compress->add_flag("--full-matrices", full_matrices, "Include every Lambda matrix as hex floats");
  compress->add_flag("--require-herald", compress_require, "Exit 4 unless every herald is well-defined");
  compress->add_option("--causaloid-out", causaloid_out, "Also write the Causaloid registry");

  Common herald_opts;
  std::string target, given, procedures;
  bool herald_require = false;
  auto* herald_cmd = app.add_subcommand("herald", "Decide one conditional probability query");
  add_common(herald_cmd, herald_opts);
  herald_cmd->add_option("--target", target, "Target as REGION:LABEL")->required();
  herald_cmd->add_option("--given", given, "Conditions as REGION:LABEL,...");
  herald_cmd->add_option("--procedures", procedures, "Actions as REGION:ACTION,...");
  herald_cmd->add_flag("--require-herald", herald_require, "Exit 4 unless the query is well-defined");

  Common diagram_opts;
  std::string expression, format = "dot";
  auto* diagram = app.add_subcommand("diagram", "Emit a diagram for an expression");
  add_common(diagram, diagram_opts);
  diagram->add_option("--expr", expression, "born:R, tomographic:R or product:R1,R2")->required();
  diagram->add_option("--format", format, "dot or svg")->check(CLI::IsMember({"dot", "svg"}));

  Common validate_opts;
  auto* validate = app.add_subcommand("validate", "Check that every region's exterior set spans");
  add_common(validate, validate_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*compress) {
      const Scenario sc = parse_scenario(compress_opts.scenario);
      const auto result = run_pipeline(sc, pipeline_options(compress_opts, full_matrices));
      write_output(compress_opts.out, dump_report(result.report));
      if (!causaloid_out.empty())
        write_output(causaloid_out, causaloid_to_json(result.build.causaloid).dump(2) + "\n");
      if (compress_require && !result.all_heralds_well_defined) return kExitHerald;
    } else if (*herald_cmd) {
      Scenario sc = parse_scenario(herald_opts.scenario);
      HeraldSpec spec;
      spec.name = "query";
      spec.target = target;
      spec.given = split(given, ',');
      for (const auto& p : split(procedures, ',')) {
        const auto colon = p.rfind(':');
        if (colon == std::string::npos) fail(ErrorCode::SchemaError, "procedure must be REGION:ACTION");
        spec.procedures[p.substr(0, colon)] = p.substr(colon + 1);
      }
      make_query(sc.backend->layout(), spec);
      sc.heralds = {spec};
      sc.composites.clear();
      sc.adjacency = false;
      sc.order_symmetry = false;
      sc.reconstruction = false;
      sc.span_check = false;
      const auto result = run_pipeline(sc, pipeline_options(herald_opts));
      write_output(herald_opts.out, result.report["heralds"][0].dump(2) + "\n");
      if (herald_require && !result.all_heralds_well_defined) return kExitHerald;
    } else if (*diagram) {
      Scenario sc = parse_scenario(diagram_opts.scenario);
      sc.span_check = false;
      sc.reconstruction = false;
      sc.order_symmetry = false;
      sc.adjacency = false;
      sc.heralds.clear();
      const auto result = run_pipeline(sc, pipeline_options(diagram_opts));
      write_output(diagram_opts.out, emit_diagram(result.build.causaloid, expression, format));
    } else if (*validate) {
      const Scenario sc = parse_scenario(validate_opts.scenario);
      const double tol = validate_opts.tol_rank.value_or(sc.rank_tol);
      const std::uint64_t seed = validate_opts.seed.value_or(sc.seed);
      Json out{{"format_version", kReportFormatVersion}, {"scenario", sc.name}};
      Json regions = Json::array();
      int status = 0;
      const Layout& layout = sc.backend->layout();
      for (LocationId x = 0; x < layout.num_locations(); ++x) {
        Json jr{{"name", layout.location(x).name}};
        try {
          const auto span = validate_exterior_span(*sc.backend, Region::single(x), tol, seed);
          jr["rank"] = span.rank;
          jr["extended_rank"] = span.extended_rank;
          jr["spanning"] = true;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::SpanDeficient) throw;
          jr["spanning"] = false;
          jr["error"] = e.what();
          status = kExitNumerical;
        }
        regions.push_back(std::move(jr));
      }
      out["regions"] = std::move(regions);
      write_output(validate_opts.out, out.dump(2) + "\n");
      return status;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_numerical(e.code()) ? kExitNumerical : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
