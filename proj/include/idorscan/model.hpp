#pragma once

#include <yaml-cpp/yaml.h>

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace idorscan::model {

enum class HttpVerb { Get, Put, Post, Delete, Options, Head, Patch, Trace };

inline constexpr std::array<HttpVerb, 8> kAllVerbs = {
    HttpVerb::Get,    HttpVerb::Put,  HttpVerb::Post,  HttpVerb::Delete,
    HttpVerb::Options, HttpVerb::Head, HttpVerb::Patch, HttpVerb::Trace,
};

std::string_view to_string(HttpVerb verb);
std::optional<HttpVerb> verb_from_string(std::string_view text);

enum class ParamLocation { Path, Query, Header, Cookie, Body, JsonBody };

std::string_view to_string(ParamLocation location);

enum class SchemaType { Integer, Number, String, Boolean, Array, Object, Unknown };

struct ParameterDef {
  std::string name;
  ParamLocation location = ParamLocation::Query;
  bool required = false;
  SchemaType schema_type = SchemaType::Unknown;
  std::optional<std::string> schema_pattern;
  std::optional<std::string> description;
  std::vector<std::string> tags;

  bool operator==(const ParameterDef&) const = default;
};

/// One element of a `security:` list: scheme name -> required scopes.
struct SecurityRequirement {
  std::map<std::string, std::vector<std::string>> schemes;

  bool operator==(const SecurityRequirement&) const = default;
};

struct ResponseDef {
  std::string status_code;  // 3-digit code or "default"
  std::optional<std::string> description;
  YAML::Node raw;  // resolved response object, kept for report emission only

  bool operator==(const ResponseDef& other) const {
    return status_code == other.status_code && description == other.description;
  }
};

struct Operation {
  HttpVerb verb = HttpVerb::Get;
  std::optional<std::string> operation_id;
  std::vector<ParameterDef> parameters;       // declared at operation level
  std::vector<ParameterDef> body_parameters;  // flattened from the request body
  bool has_request_body = false;
  std::vector<ResponseDef> responses;  // declaration order
  std::optional<std::vector<SecurityRequirement>> security;
  // Property names found in 2xx response body schemas, used by the
  // producer-index heuristic. Extracted at load so later stages never
  // touch YAML nodes.
  std::vector<std::string> success_body_properties;

  const ResponseDef* find_response(std::string_view status) const;
};

struct PathItem {
  std::string path_template;
  std::vector<ParameterDef> shared_parameters;  // endpoint level
  std::vector<Operation> operations;            // canonical verb order

  const Operation* find_operation(HttpVerb verb) const;
};

struct ApiSpec {
  std::string openapi_version;
  std::vector<PathItem> paths;  // document order; items without operations dropped
  std::optional<std::vector<SecurityRequirement>> global_security;
  std::vector<std::string> warnings;
  YAML::Node raw_doc;  // original document tree, used for annotated emission

  const PathItem* find_path(std::string_view path_template) const;
  std::size_t operation_count() const;
};

enum class FormatHint { Yaml, Json, Auto };

/// Parses an OpenAPI 3.x document (YAML or JSON) into an ApiSpec with all
/// local $ref pointers resolved. Path items with no operations are dropped
/// and recorded in warnings. JSON request bodies are flattened into
/// json_body parameters (dotted property paths, depth 3, arrays of objects
/// marked with "[]"). Throws ScanError with MalformedDocument,
/// UnsupportedVersion or UnresolvableRef.
ApiSpec load_spec(const std::string& document_text, FormatHint hint = FormatHint::Auto);

/// Deterministic endpoint processing order: lexicographic by path template
/// with literal segments before parameterized segments at each depth.
std::vector<const PathItem*> ordered_endpoints(const ApiSpec& spec);

/// Operation-level security, if declared (including an explicit empty
/// list), overrides the global declaration.
std::vector<SecurityRequirement> effective_security(const Operation& op, const ApiSpec& spec);

/// Endpoint-level parameters merged with operation-level ones. An
/// operation parameter replaces a shared parameter with the same
/// (name, location); non-overridden shared parameters come first, then
/// operation parameters, then flattened body parameters.
std::vector<ParameterDef> merged_parameters(const Operation& op, const PathItem& item);

}  // namespace idorscan::model
