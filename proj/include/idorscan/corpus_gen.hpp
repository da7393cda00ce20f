#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace idorscan::corpus {

struct PlantSpec {
  std::string technique;  // canonical catalog name
  std::size_t count = 0;
};

struct CorpusPlan {
  std::uint64_t seed = 0;
  std::vector<PlantSpec> plants;
  std::size_t clean_count = 0;
};

/// Parses a plan document:
///   seed: 42
///   clean_count: 5
///   plants:
///     - technique: Enumeration without a priori knowledge
///       count: 2
/// Throws ScanError{InvalidPlan} on negative counts or unknown techniques.
CorpusPlan load_plan(const std::string& document_text);

struct GeneratedCorpus {
  std::string spec_text;   // OpenAPI 3 document
  std::string truth_text;  // ground-truth sidecar
};

/// Deterministically builds a specification whose planted endpoints satisfy
/// exactly their technique's firing condition and, where feasible, no other
/// group's. Clean endpoints carry no identifiers and no authorization. The
/// sidecar records the full expected technique set per endpoint.
GeneratedCorpus generate(const CorpusPlan& plan);

}  // namespace idorscan::corpus
