#pragma once

// Scenario pipeline: backends, tomographic and compositional compression,
// the Causaloid and the requested heralds, summarised as a JSON report.

#include <cstdint>
#include <optional>
#include <string>

#include "causaloid/causaloid.hpp"
#include "causaloid/scenario.hpp"
#include "causaloid/serialize.hpp"

namespace causaloid {

inline constexpr const char* kToolName = "causaloid";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportFormatVersion = 1;

struct PipelineOptions {
  bool full_matrices = false;
  std::optional<double> rank_tol;
  std::optional<double> herald_tol;
  std::optional<std::uint64_t> seed;
};

struct PipelineResult {
  Json report;
  CausaloidBuild build;
  bool all_heralds_well_defined = true;
};

// Errors from the modules propagate with the region named in the message.
PipelineResult run_pipeline(const Scenario& scenario, const PipelineOptions& options = {});

// Report text: two-space indented JSON with a trailing newline.
std::string dump_report(const Json& report);

// Display name of a region ("P1" or "P1+P2").
std::string region_name(const Layout& layout, const Region& region);

// Parses "P1" or "P1+P2+..." against the layout.
Region parse_region(const Layout& layout, const std::string& text);

}  // namespace causaloid
