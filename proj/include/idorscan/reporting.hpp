#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "idorscan/annotation.hpp"
#include "idorscan/attack_rules.hpp"

namespace idorscan::reporting {

enum class ReportFormat { Yaml, Json };

/// Re-emits the source document with parameter_level_properties,
/// method_level_properties and endpoint_level_properties mappings inserted
/// in place. Output re-loads as valid YAML; annotation keys are ignored on
/// reload. Only declared parameter objects are annotated; body parameters
/// have no document node to attach to.
std::string emit_annotated(const annotation::AnnotatedSpec& annotated);

std::string emit_report(const rules::AttackReport& report, ReportFormat format);

/// Ground-truth sidecar: path -> labeled identifiers and expected techniques.
struct TruthLabels {
  struct EndpointTruth {
    std::set<std::string> identifiers;
    std::set<std::string> expected_techniques;
  };
  std::map<std::string, EndpointTruth> endpoints;
};

TruthLabels load_truth(const std::string& document_text);

struct ScanMetrics {
  std::size_t endpoints_total = 0;
  std::size_t endpoints_processed = 0;
  double endpoint_processing_ratio_percent = 0.0;
  std::size_t methods_total = 0;
  std::size_t methods_processed = 0;
  double method_processing_ratio_percent = 0.0;
  std::size_t identifiers_recognized = 0;
  std::size_t findings_total = 0;
  std::size_t endpoints_with_findings = 0;
  std::size_t endpoints_without_findings = 0;
  std::map<std::string, std::size_t> per_technique_counts;

  struct TruthStats {
    std::size_t identifiers_in_specification = 0;
    std::size_t true_identifiers_recognized = 0;
    std::size_t false_identifiers_recognized = 0;
    double identifier_true_positive_percent = 0.0;
    double identifier_false_positive_percent = 0.0;
    std::size_t generated_tests = 0;
    std::size_t relevant_tests = 0;
    double test_true_positive_percent = 0.0;
    std::size_t endpoints_with_tests = 0;
    std::size_t endpoints_without_tests = 0;
    std::size_t missed_vulnerable_endpoints = 0;
    double false_negative_percent = 0.0;
  };
  std::optional<TruthStats> truth;
};

/// Counts per ScanMetrics; with truth labels additionally computes
/// identifier TP/FP, finding relevance and endpoint-level FN rates.
/// Throws ScanError{LabelMismatch} when truth references unknown endpoints.
ScanMetrics compute_metrics(const annotation::AnnotatedSpec& annotated,
                            const rules::AttackReport& report,
                            const std::optional<TruthLabels>& truth = std::nullopt);

std::string emit_metrics(const ScanMetrics& metrics);  // JSON

}  // namespace idorscan::reporting
