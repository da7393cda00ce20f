#pragma once

#include <array>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "idorscan/model.hpp"

namespace idorscan::annotation {

enum class VerbCoverage { All, Multiple, Single };
enum class IdentifierCount { Zero, Single, Multiple };
enum class IdType { Numeric, Uuid, PersonalInfo, Array, String, Other, None };

std::string_view to_string(VerbCoverage coverage);     // "All" / "Multiple" / "Single"
std::string_view to_string(IdentifierCount count);     // "zero" / "single" / "multiple"
std::string_view to_string(IdType type);               // "numeric" / "UUID" / ...

struct EndpointProperties {
  VerbCoverage defined_http_verbs = VerbCoverage::Single;

  bool operator==(const EndpointProperties&) const = default;
};

struct MethodProperties {
  bool operation_only_parameters_specified = false;
  bool parameters_required = false;
  bool has_body = false;
  IdentifierCount identifiers_used = IdentifierCount::Zero;
  bool authorization_required = false;

  bool operator==(const MethodProperties&) const = default;
};

struct ParameterProperties {
  bool is_identifier = false;
  model::ParamLocation location = model::ParamLocation::Query;
  IdType id_type = IdType::None;
  std::optional<std::string> matched_rule;

  bool operator==(const ParameterProperties&) const = default;
};

/// Identifier-detection rule ids in their fixed evaluation order; the first
/// matching rule wins and is recorded in ParameterProperties::matched_rule.
inline constexpr std::array<std::string_view, 10> kIdentifierRuleOrder = {
    "name-suffix-id",     "name-suffix-uuid", "name-equality",
    "dictionary",         "producer-index",   "path-preceding-segment",
    "path-action-verb",   "path-leading-position",
    "description-keyword", "tags-keyword",
};

/// Normalized resource name -> paths of endpoints that produce that
/// resource's identifier (either structurally, /buckets next to
/// /buckets/{bucketID}, or by returning an id-named property in a 2xx
/// response body).
struct ProducerIndex {
  std::map<std::string, std::set<std::string>> producers;

  bool produced_elsewhere(const std::string& key, const std::string& consumer_path) const;
};

class IdentifierDictionary {
 public:
  /// Seed words plus plural forms: name, filename, group, key, phone, email.
  static IdentifierDictionary builtin();

  void add_word(std::string_view word);
  bool contains(std::string_view lowercase_name) const;

 private:
  std::set<std::string, std::less<>> words_;
};

struct AnnotateOptions {
  bool paper_exact = false;
  std::vector<std::string> extra_dictionary_words;
};

struct AnnotatedSpec {
  struct ParamRecord {
    model::ParameterDef def;
    ParameterProperties props;
  };
  struct OperationRecord {
    model::HttpVerb verb = model::HttpVerb::Get;
    const model::Operation* op = nullptr;
    MethodProperties props;
    std::vector<ParamRecord> params;  // merged endpoint + operation + body
  };
  struct EndpointRecord {
    std::string path;
    const model::PathItem* item = nullptr;
    EndpointProperties props;
    std::vector<OperationRecord> operations;
  };

  std::shared_ptr<const model::ApiSpec> spec;
  std::vector<EndpointRecord> endpoints;  // ordered_endpoints order

  const EndpointRecord* find_endpoint(std::string_view path) const;
  const OperationRecord* find_operation(std::string_view path, model::HttpVerb verb) const;
  const ParamRecord* find_parameter(std::string_view path, model::HttpVerb verb,
                                    std::string_view name, model::ParamLocation location) const;
  std::size_t operation_count() const;
};

VerbCoverage classify_verbs(const model::PathItem& item);

ProducerIndex build_producer_index(const model::ApiSpec& spec);

/// Evaluates the identifier heuristics in kIdentifierRuleOrder; returns
/// whether the parameter references a resource and which rule fired first.
std::pair<bool, std::optional<std::string>> detect_identifier(
    const model::ParameterDef& p, const std::string& path,
    const ProducerIndex& producers, const IdentifierDictionary& dictionary);

/// Identifier type inference. Only meaningful for parameters that
/// detect_identifier accepted. When paper_exact is false an extension rule
/// also classifies string parameters whose schema pattern accepts
/// canonical UUIDs as Uuid.
IdType infer_id_type(const model::ParameterDef& p, bool paper_exact = false);

MethodProperties method_properties(const model::Operation& op, const model::PathItem& item,
                                   const model::ApiSpec& spec,
                                   const std::vector<AnnotatedSpec::ParamRecord>& params);

/// Computes property records for every endpoint, operation and merged
/// parameter. Dispatches to the parallel kernel when OpenMP is available;
/// both kernels produce identical results.
AnnotatedSpec annotate(std::shared_ptr<const model::ApiSpec> spec,
                       const AnnotateOptions& options = {});
AnnotatedSpec annotate_serial(std::shared_ptr<const model::ApiSpec> spec,
                              const AnnotateOptions& options = {});
AnnotatedSpec annotate_parallel(std::shared_ptr<const model::ApiSpec> spec,
                                const AnnotateOptions& options = {});

// Shared name heuristics, exposed for the producer index and tests.
std::string normalize_resource_name(std::string_view name);
bool names_similar(std::string_view a, std::string_view b);
std::size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace idorscan::annotation
