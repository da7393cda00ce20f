#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "idorscan/reporting.hpp"

namespace idorscan::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitClean = 0;
inline constexpr int kExitFindings = 1;
inline constexpr int kExitInputError = 2;

struct ScanConfig {
  std::string input_path;
  std::string output_dir = ".";
  reporting::ReportFormat format = reporting::ReportFormat::Yaml;
  bool paper_exact = false;
  std::optional<std::string> dictionary_path;
  bool fail_on_findings = false;
};

struct GenerateConfig {
  std::string plan_path;
  std::optional<std::uint64_t> seed;  // overrides the plan's seed
  std::string out_dir = ".";
};

/// Writes <stem>.report.{yaml|json} and <stem>.metrics.json. Exit 0 when no
/// findings (or fail_on_findings unset), 1 when findings are present and
/// fail_on_findings is set, 2 on input errors.
int cmd_scan(const ScanConfig& config);

/// Writes <stem>.annotated.yaml. Exit 0 on success, 2 on input errors.
int cmd_annotate(const ScanConfig& config);

/// Writes <stem>.metrics.json including truth-based rates. Exit 0 on
/// success, 2 on input errors or label mismatches.
int cmd_metrics(const ScanConfig& config, const std::string& truth_path);

/// Writes corpus.yaml and corpus.truth.yaml into out_dir.
int cmd_generate(const GenerateConfig& config);

int run(int argc, char** argv);

}  // namespace idorscan::cli
