#include <doctest.h>

#include <yaml-cpp/yaml.h>

#include "idorscan/annotation.hpp"
#include "idorscan/attack_rules.hpp"
#include "idorscan/corpus_gen.hpp"
#include "idorscan/doc_convert.hpp"
#include "idorscan/errors.hpp"
#include "idorscan/reporting.hpp"
#include "test_support.hpp"

using namespace idorscan;
using namespace idorscan::reporting;
using test_support::fixture_path;
using test_support::normalize_whitespace;
using test_support::read_file;

namespace {

struct Scan {
  std::shared_ptr<const model::ApiSpec> spec;
  annotation::AnnotatedSpec annotated;
  rules::AttackReport report;
};

Scan run_scan(const std::string& text) {
  Scan scan;
  scan.spec = test_support::load_shared(text);
  scan.annotated = annotation::annotate(scan.spec);
  scan.report = rules::evaluate(scan.annotated);
  return scan;
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("emit_annotated matches the golden vault output") {
  Scan scan = run_scan(read_file(fixture_path("vaults.yaml")));
  std::string emitted = emit_annotated(scan.annotated);
  std::string golden = read_file(fixture_path("vaults.annotated.golden.yaml"));
  CHECK(normalize_whitespace(emitted) == normalize_whitespace(golden));
  // Re-loads as valid YAML.
  CHECK_NOTHROW(YAML::Load(emitted));
}

TEST_CASE("emit_annotated round trip re-annotates identically") {
  for (const char* fixture : {"vaults.yaml", "petstore.yaml"}) {
    Scan scan = run_scan(read_file(fixture_path(fixture)));
    std::string emitted = emit_annotated(scan.annotated);
    Scan reloaded = run_scan(emitted);
    CHECK(test_support::annotated_fingerprint(reloaded.annotated) ==
          test_support::annotated_fingerprint(scan.annotated));
  }
}

TEST_CASE("emit_annotated stamps empty specifications") {
  Scan scan = run_scan("openapi: \"3.0.0\"\npaths: {}\n");
  std::string emitted = emit_annotated(scan.annotated);
  CHECK(emitted.rfind("# idorscan:", 0) == 0);
  CHECK_NOTHROW(YAML::Load(emitted));
}

TEST_CASE("emit_annotated writes one endpoint properties block per endpoint") {
  corpus::CorpusPlan plan;
  plan.seed = 4;
  plan.clean_count = 10;
  auto generated = corpus::generate(plan);
  Scan scan = run_scan(generated.spec_text);
  std::string emitted = emit_annotated(scan.annotated);
  CHECK(count_occurrences(emitted, "endpoint_level_properties:") == 10);
  CHECK(count_occurrences(emitted, "method_level_properties:") == 10);
}

TEST_CASE("emit_report matches the golden vault report") {
  Scan scan = run_scan(read_file(fixture_path("vaults.yaml")));
  std::string emitted = emit_report(scan.report, ReportFormat::Yaml);
  std::string golden = read_file(fixture_path("vaults.report.golden.yaml"));
  CHECK(normalize_whitespace(emitted) == normalize_whitespace(golden));
}

TEST_CASE("empty report emits an empty mapping") {
  Scan scan = run_scan("openapi: \"3.0.0\"\npaths: {}\n");
  std::string yaml = emit_report(scan.report, ReportFormat::Yaml);
  YAML::Node parsed = YAML::Load(yaml);
  CHECK(parsed.IsMap());
  CHECK(parsed.size() == 0);
  std::string json = emit_report(scan.report, ReportFormat::Json);
  CHECK(nlohmann::json::parse(json).empty());
}

TEST_CASE("yaml and json reports are structurally equal") {
  Scan scan = run_scan(read_file(fixture_path("vaults.yaml")));
  std::string yaml_text = emit_report(scan.report, ReportFormat::Yaml);
  std::string json_text = emit_report(scan.report, ReportFormat::Json);
  auto from_yaml = yaml_to_json(YAML::Load(yaml_text));
  auto from_json = nlohmann::ordered_json::parse(json_text);
  CHECK(nlohmann::json(from_yaml) == nlohmann::json(from_json));
}

TEST_CASE("golden outputs are byte-stable across runs") {
  std::string text = read_file(fixture_path("vaults.yaml"));
  Scan first = run_scan(text);
  Scan second = run_scan(text);
  CHECK(emit_annotated(first.annotated) == emit_annotated(second.annotated));
  CHECK(emit_report(first.report, ReportFormat::Yaml) ==
        emit_report(second.report, ReportFormat::Yaml));
  CHECK(emit_metrics(compute_metrics(first.annotated, first.report)) ==
        emit_metrics(compute_metrics(second.annotated, second.report)));
}

TEST_CASE("compute_metrics base counts") {
  Scan scan = run_scan(read_file(fixture_path("vaults.yaml")));
  ScanMetrics metrics = compute_metrics(scan.annotated, scan.report);
  CHECK(metrics.endpoints_total == 1);
  CHECK(metrics.endpoints_processed == 1);
  CHECK(metrics.endpoint_processing_ratio_percent == doctest::Approx(100.0));
  CHECK(metrics.methods_total == 1);
  CHECK(metrics.method_processing_ratio_percent == doctest::Approx(100.0));
  CHECK(metrics.identifiers_recognized == 1);
  CHECK(metrics.findings_total == 3);
  CHECK(metrics.endpoints_with_findings == 1);
  CHECK(metrics.endpoints_without_findings == 0);
  std::size_t technique_sum = 0;
  for (const auto& [technique, count] : metrics.per_technique_counts) technique_sum += count;
  CHECK(technique_sum == 3);
}

TEST_CASE("findings_total equals the sum of per-path counts") {
  corpus::CorpusPlan plan;
  plan.seed = 17;
  plan.clean_count = 4;
  for (const auto& pattern : rules::catalog()) plan.plants.push_back({pattern.technique, 1});
  Scan scan = run_scan(corpus::generate(plan).spec_text);
  ScanMetrics metrics = compute_metrics(scan.annotated, scan.report);
  std::size_t sum = 0;
  for (const auto& entry : scan.report.entries) sum += entry.attacks.size();
  CHECK(metrics.findings_total == sum);
  CHECK(metrics.endpoint_processing_ratio_percent == doctest::Approx(100.0));
}

TEST_CASE("compute_metrics with truth labels") {
  const char* doc =
      "openapi: \"3.0.0\"\n"
      "paths:\n"
      "  /orders/{orderId}:\n"
      "    get:\n"
      "      security: [{ApiKey: []}]\n"
      "      parameters:\n"
      "        - {name: orderId, in: path, required: true, schema: {type: integer}}\n"
      "      responses: {\"200\": {description: OK}, \"403\": {description: Forbidden}}\n"
      "  /misc:\n"
      "    get:\n"
      "      parameters:\n"
      "        - {name: email, in: query, schema: {type: string}}\n"
      "      responses: {\"200\": {description: OK}}\n"
      "components:\n"
      "  securitySchemes:\n"
      "    ApiKey: {type: apiKey, in: header, name: X-Key}\n";
  Scan scan = run_scan(doc);

  SUBCASE("full agreement on identifiers") {
    // /misc declares an identifier ("email" via the dictionary) on a
    // single-verb endpoint, so method change fires there even without
    // authorization.
    TruthLabels truth = load_truth(
        "/orders/{orderId}:\n"
        "  identifiers: [orderId]\n"
        "  expected_techniques:\n"
        "    - Enumeration without a priori knowledge\n"
        "    - Authorization token manipulation\n"
        "    - Change HTTP Method (Verb tampering)\n"
        "/misc:\n"
        "  identifiers: [email]\n"
        "  expected_techniques:\n"
        "    - Change HTTP Method (Verb tampering)\n");
    ScanMetrics metrics = compute_metrics(scan.annotated, scan.report, truth);
    REQUIRE(metrics.truth.has_value());
    CHECK(metrics.truth->identifiers_in_specification == 2);
    CHECK(metrics.truth->true_identifiers_recognized == 2);
    CHECK(metrics.truth->false_identifiers_recognized == 0);
    CHECK(metrics.truth->identifier_true_positive_percent == doctest::Approx(100.0));
    CHECK(metrics.truth->identifier_false_positive_percent == doctest::Approx(0.0));
    CHECK(metrics.truth->test_true_positive_percent == doctest::Approx(100.0));
    CHECK(metrics.truth->missed_vulnerable_endpoints == 0);
    CHECK(metrics.truth->false_negative_percent == doctest::Approx(0.0));
  }
  SUBCASE("uncredited recognition counts as false positive") {
    TruthLabels truth = load_truth(
        "/orders/{orderId}:\n"
        "  identifiers: [orderId]\n"
        "  expected_techniques: [Authorization token manipulation]\n"
        "/misc:\n"
        "  identifiers: []\n"
        "  expected_techniques: []\n");
    ScanMetrics metrics = compute_metrics(scan.annotated, scan.report, truth);
    REQUIRE(metrics.truth.has_value());
    CHECK(metrics.truth->identifiers_in_specification == 1);
    CHECK(metrics.truth->true_identifiers_recognized == 1);
    CHECK(metrics.truth->false_identifiers_recognized == 1);  // "email" on /misc
  }
  SUBCASE("unknown endpoint raises LabelMismatch") {
    TruthLabels truth = load_truth("/nope:\n  identifiers: []\n");
    try {
      compute_metrics(scan.annotated, scan.report, truth);
      FAIL("expected LabelMismatch");
    } catch (const ScanError& e) {
      CHECK(e.code() == ErrorCode::LabelMismatch);
    }
  }
}

TEST_CASE("clean corpus yields zero false negatives") {
  corpus::CorpusPlan plan;
  plan.seed = 5;
  plan.clean_count = 5;
  auto generated = corpus::generate(plan);
  Scan scan = run_scan(generated.spec_text);
  TruthLabels truth = load_truth(generated.truth_text);
  ScanMetrics metrics = compute_metrics(scan.annotated, scan.report, truth);
  REQUIRE(metrics.truth.has_value());
  CHECK(scan.report.entries.empty());
  CHECK(metrics.truth->false_negative_percent == doctest::Approx(0.0));
  CHECK(metrics.truth->false_identifiers_recognized == 0);
}
