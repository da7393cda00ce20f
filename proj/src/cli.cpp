#include "idorscan/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "idorscan/annotation.hpp"
#include "idorscan/attack_rules.hpp"
#include "idorscan/corpus_gen.hpp"
#include "idorscan/errors.hpp"
#include "idorscan/model.hpp"

namespace idorscan::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ScanError(ErrorCode::MalformedDocument, "cannot read '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Writes through a temporary file and renames, so failed runs never leave
/// partial outputs behind.
void write_file_atomic(const fs::path& final_path, const std::string& content) {
  if (final_path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(final_path.parent_path(), ec);
  }
  fs::path tmp = final_path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw ScanError(ErrorCode::SerializationFailure, "cannot open '" + tmp.string() + "'");
    }
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw ScanError(ErrorCode::SerializationFailure, "write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, final_path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw ScanError(ErrorCode::SerializationFailure,
                    "cannot move output into place at '" + final_path.string() + "'");
  }
}

model::FormatHint hint_for(const fs::path& input) {
  std::string ext = input.extension().string();
  if (ext == ".json") return model::FormatHint::Json;
  if (ext == ".yaml" || ext == ".yml") return model::FormatHint::Yaml;
  return model::FormatHint::Auto;
}

std::vector<std::string> load_dictionary_words(const std::optional<std::string>& path) {
  std::vector<std::string> words;
  if (!path) return words;
  std::ifstream in(*path);
  if (!in) {
    throw ScanError(ErrorCode::MalformedDocument, "cannot read dictionary '" + *path + "'");
  }
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    words.push_back(line);
  }
  return words;
}

struct Pipeline {
  std::shared_ptr<const model::ApiSpec> spec;
  annotation::AnnotatedSpec annotated;
  rules::AttackReport report;
};

Pipeline run_pipeline(const ScanConfig& config, bool with_report) {
  auto spec = std::make_shared<model::ApiSpec>(
      model::load_spec(read_file(config.input_path), hint_for(config.input_path)));
  for (const auto& warning : spec->warnings) {
    std::cerr << "warning: " << warning << "\n";
  }
  Pipeline pipeline;
  pipeline.spec = spec;
  annotation::AnnotateOptions options;
  options.paper_exact = config.paper_exact;
  options.extra_dictionary_words = load_dictionary_words(config.dictionary_path);
  pipeline.annotated = annotation::annotate(spec, options);
  if (with_report) {
    pipeline.report = rules::evaluate(pipeline.annotated, {.paper_exact = config.paper_exact});
  }
  return pipeline;
}

fs::path output_path(const ScanConfig& config, const std::string& suffix) {
  fs::path stem = fs::path(config.input_path).stem();
  return fs::path(config.output_dir) / (stem.string() + suffix);
}

int report_error(const std::exception& e) {
  std::cerr << "error: " << e.what() << "\n";
  return kExitInputError;
}

}  // namespace

int cmd_scan(const ScanConfig& config) {
  try {
    Pipeline pipeline = run_pipeline(config, true);
    const bool json = config.format == reporting::ReportFormat::Json;
    fs::path report_path = output_path(config, json ? ".report.json" : ".report.yaml");
    fs::path metrics_path = output_path(config, ".metrics.json");
    write_file_atomic(report_path, reporting::emit_report(pipeline.report, config.format));
    reporting::ScanMetrics metrics =
        reporting::compute_metrics(pipeline.annotated, pipeline.report);
    write_file_atomic(metrics_path, reporting::emit_metrics(metrics));
    std::cout << config.input_path << ": " << pipeline.report.total_findings()
              << " potential vulnerabilities across " << pipeline.report.entries.size()
              << " endpoints (report: " << report_path.string()
              << ", metrics: " << metrics_path.string() << ")\n";
    if (config.fail_on_findings && pipeline.report.total_findings() > 0) return kExitFindings;
    return kExitClean;
  } catch (const std::exception& e) {
    return report_error(e);
  }
}

int cmd_annotate(const ScanConfig& config) {
  try {
    Pipeline pipeline = run_pipeline(config, false);
    fs::path annotated_path = output_path(config, ".annotated.yaml");
    write_file_atomic(annotated_path, reporting::emit_annotated(pipeline.annotated));
    std::cout << config.input_path << ": annotated " << pipeline.annotated.endpoints.size()
              << " endpoints (" << annotated_path.string() << ")\n";
    return kExitClean;
  } catch (const std::exception& e) {
    return report_error(e);
  }
}

int cmd_metrics(const ScanConfig& config, const std::string& truth_path) {
  try {
    Pipeline pipeline = run_pipeline(config, true);
    reporting::TruthLabels truth = reporting::load_truth(read_file(truth_path));
    reporting::ScanMetrics metrics =
        reporting::compute_metrics(pipeline.annotated, pipeline.report, truth);
    fs::path metrics_path = output_path(config, ".metrics.json");
    write_file_atomic(metrics_path, reporting::emit_metrics(metrics));
    std::cout << config.input_path << ": metrics for " << metrics.endpoints_processed
              << " endpoints (" << metrics_path.string() << ")\n";
    return kExitClean;
  } catch (const std::exception& e) {
    return report_error(e);
  }
}

int cmd_generate(const GenerateConfig& config) {
  try {
    corpus::CorpusPlan plan = corpus::load_plan(read_file(config.plan_path));
    if (config.seed) plan.seed = *config.seed;
    corpus::GeneratedCorpus corpus = corpus::generate(plan);
    fs::path spec_path = fs::path(config.out_dir) / "corpus.yaml";
    fs::path truth_path = fs::path(config.out_dir) / "corpus.truth.yaml";
    write_file_atomic(spec_path, corpus.spec_text);
    write_file_atomic(truth_path, corpus.truth_text);
    std::cout << "generated " << spec_path.string() << " and " << truth_path.string() << "\n";
    return kExitClean;
  } catch (const std::exception& e) {
    return report_error(e);
  }
}

}  // namespace idorscan::cli

#include <CLI11.hpp>

namespace idorscan::cli {

int run(int argc, char** argv) {
  CLI::App app{"Static IDOR/BOLA analysis of OpenAPI 3.x specifications"};
  app.require_subcommand(1);

  ScanConfig scan_config;
  std::string scan_format = "yaml";
  CLI::App* scan = app.add_subcommand("scan", "Detect potential vulnerabilities and write a report");
  scan->add_option("input", scan_config.input_path, "OpenAPI document (YAML or JSON)")->required();
  scan->add_option("--out-dir", scan_config.output_dir, "Output directory");
  scan->add_option("--format", scan_format, "Report format: yaml or json")
      ->check(CLI::IsMember({"yaml", "json"}));
  scan->add_flag("--paper-exact", scan_config.paper_exact,
                 "Disable the UUID-pattern and type-gate extensions");
  scan->add_option("--dictionary", scan_config.dictionary_path,
                   "Extra identifier-name words, one per line");
  scan->add_flag("--fail-on-findings", scan_config.fail_on_findings,
                 "Exit 1 when findings are present");

  ScanConfig annotate_config;
  CLI::App* annotate = app.add_subcommand("annotate", "Write the property-annotated specification");
  annotate->add_option("input", annotate_config.input_path, "OpenAPI document (YAML or JSON)")
      ->required();
  annotate->add_option("--out-dir", annotate_config.output_dir, "Output directory");
  annotate->add_flag("--paper-exact", annotate_config.paper_exact,
                     "Disable the UUID-pattern extension");
  annotate->add_option("--dictionary", annotate_config.dictionary_path,
                       "Extra identifier-name words, one per line");

  ScanConfig metrics_config;
  std::string truth_path;
  CLI::App* metrics = app.add_subcommand("metrics", "Compute scan metrics against a truth sidecar");
  metrics->add_option("input", metrics_config.input_path, "OpenAPI document (YAML or JSON)")
      ->required();
  metrics->add_option("--truth", truth_path, "Ground-truth sidecar")->required();
  metrics->add_option("--out-dir", metrics_config.output_dir, "Output directory");
  metrics->add_flag("--paper-exact", metrics_config.paper_exact,
                    "Disable the UUID-pattern and type-gate extensions");
  metrics->add_option("--dictionary", metrics_config.dictionary_path,
                      "Extra identifier-name words, one per line");

  GenerateConfig generate_config;
  std::uint64_t seed_value = 0;
  CLI::App* generate = app.add_subcommand("generate", "Generate a synthetic corpus from a plan");
  generate->add_option("--plan", generate_config.plan_path, "Corpus plan (YAML)")->required();
  CLI::Option* seed_opt = generate->add_option("--seed", seed_value, "Overrides the plan's seed");
  generate->add_option("--out", generate_config.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitClean : kExitInputError;
  }

  if (scan->parsed()) {
    scan_config.format = scan_format == "json" ? reporting::ReportFormat::Json
                                               : reporting::ReportFormat::Yaml;
    return cmd_scan(scan_config);
  }
  if (annotate->parsed()) return cmd_annotate(annotate_config);
  if (metrics->parsed()) return cmd_metrics(metrics_config, truth_path);
  if (generate->parsed()) {
    if (seed_opt->count() > 0) generate_config.seed = seed_value;
    return cmd_generate(generate_config);
  }
  return kExitInputError;
}

}  // namespace idorscan::cli
