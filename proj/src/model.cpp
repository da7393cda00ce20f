#include "idorscan/model.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "idorscan/doc_convert.hpp"
#include "idorscan/errors.hpp"

namespace idorscan::model {

namespace {

constexpr std::size_t kBodyFlattenDepth = 3;

bool is_json_media_type(const std::string& media_type) {
  std::string lower;
  lower.reserve(media_type.size());
  for (char c : media_type) lower.push_back(static_cast<char>(std::tolower(c)));
  if (lower.rfind("application/json", 0) == 0) return true;
  auto semi = lower.find(';');
  std::string bare = semi == std::string::npos ? lower : lower.substr(0, semi);
  return bare.size() >= 5 && bare.compare(bare.size() - 5, 5, "+json") == 0;
}

SchemaType schema_type_from_string(const std::string& type) {
  if (type == "integer") return SchemaType::Integer;
  if (type == "number") return SchemaType::Number;
  if (type == "string") return SchemaType::String;
  if (type == "boolean") return SchemaType::Boolean;
  if (type == "array") return SchemaType::Array;
  if (type == "object") return SchemaType::Object;
  return SchemaType::Unknown;
}

/// Follows chains of local "$ref" pointers inside a single document.
class RefResolver {
 public:
  explicit RefResolver(const YAML::Node& root) : root_(root) {}

  YAML::Node resolve(const YAML::Node& node) const {
    YAML::Node current = node;
    std::set<std::string> chain;
    while (current && current.IsMap()) {
      YAML::Node ref = current["$ref"];
      if (!ref || !ref.IsScalar()) break;
      const std::string target = ref.Scalar();
      if (target.rfind("#/", 0) != 0) {
        throw ScanError(ErrorCode::UnresolvableRef,
                        "only local '#/...' references are supported: " + target);
      }
      if (!chain.insert(target).second) {
        throw ScanError(ErrorCode::UnresolvableRef, "circular reference chain at " + target);
      }
      // reset() rebinds the handle; operator= would rewrite the tree.
      current.reset(lookup(target));
    }
    return current;
  }

 private:
  YAML::Node lookup(const std::string& pointer) const {
    YAML::Node node = root_;
    std::size_t pos = 2;  // skip "#/"
    while (pos <= pointer.size()) {
      std::size_t next = pointer.find('/', pos);
      std::string token = pointer.substr(pos, next == std::string::npos ? next : next - pos);
      // JSON-pointer escapes
      std::string unescaped;
      unescaped.reserve(token.size());
      for (std::size_t i = 0; i < token.size(); ++i) {
        if (token[i] == '~' && i + 1 < token.size()) {
          unescaped.push_back(token[i + 1] == '1' ? '/' : '~');
          ++i;
        } else {
          unescaped.push_back(token[i]);
        }
      }
      YAML::Node child = node[unescaped];
      if (!child) {
        throw ScanError(ErrorCode::UnresolvableRef, "reference target not found: #" + pointer);
      }
      node.reset(child);
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    return node;
  }

  YAML::Node root_;
};

YAML::Node parse_document(const std::string& text, FormatHint hint) {
  bool as_json = hint == FormatHint::Json;
  if (hint == FormatHint::Auto) {
    auto first = text.find_first_not_of(" \t\r\n");
    as_json = first != std::string::npos && text[first] == '{';
  }
  if (as_json) {
    try {
      return json_to_yaml(nlohmann::ordered_json::parse(text));
    } catch (const nlohmann::json::exception& e) {
      throw ScanError(ErrorCode::MalformedDocument, std::string("JSON parse error: ") + e.what());
    }
  }
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ScanError(ErrorCode::MalformedDocument, std::string("YAML parse error: ") + e.what());
  }
}

std::vector<std::string> read_string_list(const YAML::Node& node) {
  std::vector<std::string> out;
  if (node && node.IsSequence()) {
    for (const auto& item : node) {
      if (item.IsScalar()) out.push_back(item.Scalar());
    }
  }
  return out;
}

std::vector<SecurityRequirement> parse_security_list(const YAML::Node& node) {
  std::vector<SecurityRequirement> out;
  if (!node || !node.IsSequence()) return out;
  for (const auto& entry : node) {
    if (!entry.IsMap()) continue;
    SecurityRequirement req;
    for (const auto& kv : entry) {
      req.schemes[kv.first.Scalar()] = read_string_list(kv.second);
    }
    out.push_back(std::move(req));
  }
  return out;
}

std::optional<ParameterDef> parse_parameter(const YAML::Node& raw, const RefResolver& refs,
                                            const std::string& path,
                                            std::vector<std::string>& warnings) {
  YAML::Node node = refs.resolve(raw);
  if (!node || !node.IsMap()) return std::nullopt;
  YAML::Node name = node["name"];
  YAML::Node in = node["in"];
  if (!name || !name.IsScalar() || !in || !in.IsScalar()) {
    warnings.push_back("parameter without name/in skipped at " + path);
    return std::nullopt;
  }
  ParameterDef def;
  def.name = name.Scalar();
  const std::string& location = in.Scalar();
  if (location == "path") {
    def.location = ParamLocation::Path;
  } else if (location == "query") {
    def.location = ParamLocation::Query;
  } else if (location == "header") {
    def.location = ParamLocation::Header;
  } else if (location == "cookie") {
    def.location = ParamLocation::Cookie;
  } else {
    warnings.push_back("parameter '" + def.name + "' has unsupported location '" + location +
                       "' at " + path + "; skipped");
    return std::nullopt;
  }
  if (YAML::Node required = node["required"]; required && required.IsScalar()) {
    def.required = required.as<bool>(false);
  }
  if (def.location == ParamLocation::Path) def.required = true;
  if (YAML::Node desc = node["description"]; desc && desc.IsScalar()) {
    def.description = desc.Scalar();
  }
  def.tags = read_string_list(node["tags"]);
  YAML::Node schema = refs.resolve(node["schema"]);
  if (schema && schema.IsMap()) {
    if (YAML::Node type = schema["type"]; type && type.IsScalar()) {
      def.schema_type = schema_type_from_string(type.Scalar());
    }
    if (YAML::Node pattern = schema["pattern"]; pattern && pattern.IsScalar()) {
      def.schema_pattern = pattern.Scalar();
    }
    auto schema_tags = read_string_list(schema["tags"]);
    def.tags.insert(def.tags.end(), schema_tags.begin(), schema_tags.end());
  }
  return def;
}

SchemaType schema_type_of(const YAML::Node& schema) {
  if (!schema || !schema.IsMap()) return SchemaType::Unknown;
  if (YAML::Node type = schema["type"]; type && type.IsScalar()) {
    return schema_type_from_string(type.Scalar());
  }
  if (schema["properties"]) return SchemaType::Object;
  if (schema["items"]) return SchemaType::Array;
  return SchemaType::Unknown;
}

ParameterDef make_body_leaf(std::string name, const YAML::Node& schema, SchemaType type,
                            bool required) {
  ParameterDef def;
  def.name = std::move(name);
  def.location = ParamLocation::JsonBody;
  def.required = required;
  def.schema_type = type;
  if (schema && schema.IsMap()) {
    if (YAML::Node pattern = schema["pattern"]; pattern && pattern.IsScalar()) {
      def.schema_pattern = pattern.Scalar();
    }
    if (YAML::Node desc = schema["description"]; desc && desc.IsScalar()) {
      def.description = desc.Scalar();
    }
    auto tags = read_string_list(schema["tags"]);
    def.tags.insert(def.tags.end(), tags.begin(), tags.end());
  }
  return def;
}

std::size_t component_count(const std::string& dotted) {
  return static_cast<std::size_t>(std::count(dotted.begin(), dotted.end(), '.')) + 1;
}

void flatten_object_schema(const YAML::Node& schema, const RefResolver& refs,
                           const std::string& prefix, bool ancestors_required,
                           std::vector<ParameterDef>& out) {
  YAML::Node properties = schema["properties"];
  if (!properties || !properties.IsMap()) return;
  std::set<std::string> required_names;
  if (YAML::Node req = schema["required"]; req && req.IsSequence()) {
    for (const auto& item : req) {
      if (item.IsScalar()) required_names.insert(item.Scalar());
    }
  }
  for (const auto& kv : properties) {
    const std::string prop = kv.first.Scalar();
    YAML::Node prop_schema = refs.resolve(kv.second);
    const std::string dotted = prefix.empty() ? prop : prefix + "." + prop;
    const bool required = ancestors_required && required_names.count(prop) > 0;
    SchemaType type = schema_type_of(prop_schema);
    if (type == SchemaType::Object && component_count(dotted) < kBodyFlattenDepth &&
        prop_schema["properties"]) {
      flatten_object_schema(prop_schema, refs, dotted, required, out);
      continue;
    }
    if (type == SchemaType::Array) {
      YAML::Node items = refs.resolve(prop_schema["items"]);
      if (schema_type_of(items) == SchemaType::Object && items["properties"] &&
          component_count(dotted) < kBodyFlattenDepth) {
        flatten_object_schema(items, refs, dotted + "[]", required, out);
        continue;
      }
      out.push_back(make_body_leaf(dotted, prop_schema, SchemaType::Array, required));
      continue;
    }
    out.push_back(make_body_leaf(dotted, prop_schema, type, required));
  }
}

std::vector<ParameterDef> flatten_request_body(const YAML::Node& media_schema,
                                               const RefResolver& refs, bool body_required) {
  std::vector<ParameterDef> out;
  YAML::Node schema = refs.resolve(media_schema);
  if (!schema || !schema.IsMap()) return out;
  SchemaType root_type = schema_type_of(schema);
  if (root_type == SchemaType::Object) {
    flatten_object_schema(schema, refs, "", body_required, out);
    return out;
  }
  if (root_type == SchemaType::Array) {
    YAML::Node items = refs.resolve(schema["items"]);
    if (schema_type_of(items) == SchemaType::Object && items["properties"]) {
      flatten_object_schema(items, refs, "[]", body_required, out);
      return out;
    }
    out.push_back(make_body_leaf("body", schema, SchemaType::Array, body_required));
    return out;
  }
  // Scalar-rooted JSON body: keep a single parameter standing in for the
  // whole payload.
  out.push_back(make_body_leaf("body", schema, root_type, body_required));
  return out;
}

void collect_schema_property_names(const YAML::Node& schema, const RefResolver& refs,
                                   std::size_t depth, std::vector<std::string>& out) {
  if (!schema || !schema.IsMap() || depth > 2) return;
  if (YAML::Node properties = schema["properties"]; properties && properties.IsMap()) {
    for (const auto& kv : properties) {
      out.push_back(kv.first.Scalar());
      collect_schema_property_names(refs.resolve(kv.second), refs, depth + 1, out);
    }
  }
  if (YAML::Node items = schema["items"]; items) {
    collect_schema_property_names(refs.resolve(items), refs, depth + 1, out);
  }
}

bool valid_status_code(const std::string& code) {
  if (code == "default") return true;
  return code.size() == 3 && std::all_of(code.begin(), code.end(),
                                         [](unsigned char c) { return std::isdigit(c); });
}

void parse_request_body(Operation& op, const YAML::Node& raw, const RefResolver& refs) {
  YAML::Node body = refs.resolve(raw);
  if (!body || !body.IsMap()) return;
  op.has_request_body = true;
  bool required = false;
  if (YAML::Node req = body["required"]; req && req.IsScalar()) {
    required = req.as<bool>(false);
  }
  YAML::Node content = body["content"];
  if (!content || !content.IsMap() || content.size() == 0) return;
  // Prefer the first JSON media type; fall back to the first entry.
  YAML::Node chosen;
  std::string chosen_type;
  for (const auto& kv : content) {
    const std::string media = kv.first.Scalar();
    if (chosen_type.empty()) {
      chosen.reset(kv.second);
      chosen_type = media;
    }
    if (is_json_media_type(media)) {
      chosen.reset(kv.second);
      chosen_type = media;
      break;
    }
  }
  YAML::Node media_obj = refs.resolve(chosen);
  if (is_json_media_type(chosen_type)) {
    if (media_obj && media_obj.IsMap()) {
      op.body_parameters = flatten_request_body(media_obj["schema"], refs, required);
    }
    return;
  }
  // Opaque non-JSON payload (form data, octet streams, ...).
  ParameterDef def;
  def.name = "body";
  def.location = ParamLocation::Body;
  def.required = required;
  def.schema_type = SchemaType::Unknown;
  op.body_parameters.push_back(std::move(def));
}

void parse_responses(Operation& op, const YAML::Node& raw, const RefResolver& refs,
                     const std::string& path, std::vector<std::string>& warnings) {
  if (!raw || !raw.IsMap()) return;
  for (const auto& kv : raw) {
    const std::string status = kv.first.Scalar();
    if (!valid_status_code(status)) {
      warnings.push_back("response status '" + status + "' at " + path + " is not a 3-digit code or 'default'; skipped");
      continue;
    }
    YAML::Node response = refs.resolve(kv.second);
    ResponseDef def;
    def.status_code = status;
    def.raw = response;
    if (response && response.IsMap()) {
      if (YAML::Node desc = response["description"]; desc && desc.IsScalar()) {
        def.description = desc.Scalar();
      }
      if (!status.empty() && status[0] == '2') {
        YAML::Node content = response["content"];
        if (content && content.IsMap()) {
          for (const auto& media : content) {
            if (!is_json_media_type(media.first.Scalar())) continue;
            YAML::Node media_obj = refs.resolve(media.second);
            if (media_obj && media_obj.IsMap()) {
              collect_schema_property_names(refs.resolve(media_obj["schema"]), refs, 0,
                                            op.success_body_properties);
            }
            break;
          }
        }
      }
    }
    op.responses.push_back(std::move(def));
  }
}

void dedup_parameters(std::vector<ParameterDef>& params, const std::string& path,
                      std::vector<std::string>& warnings) {
  std::set<std::pair<std::string, ParamLocation>> seen;
  std::vector<ParameterDef> unique;
  unique.reserve(params.size());
  for (auto& p : params) {
    if (seen.emplace(p.name, p.location).second) {
      unique.push_back(std::move(p));
    } else {
      warnings.push_back("duplicate parameter (" + p.name + ", " +
                         std::string(to_string(p.location)) + ") at " + path + "; first kept");
    }
  }
  params = std::move(unique);
}

Operation parse_operation(HttpVerb verb, const YAML::Node& node, const RefResolver& refs,
                          const std::string& path, std::vector<std::string>& warnings) {
  Operation op;
  op.verb = verb;
  if (YAML::Node id = node["operationId"]; id && id.IsScalar()) {
    op.operation_id = id.Scalar();
  }
  if (YAML::Node params = node["parameters"]; params && params.IsSequence()) {
    for (const auto& raw : params) {
      if (auto def = parse_parameter(raw, refs, path, warnings)) {
        op.parameters.push_back(std::move(*def));
      }
    }
    dedup_parameters(op.parameters, path, warnings);
  }
  if (YAML::Node body = node["requestBody"]; body) {
    parse_request_body(op, body, refs);
  }
  parse_responses(op, node["responses"], refs, path, warnings);
  if (YAML::Node security = node["security"]; security) {
    op.security = parse_security_list(security);
  }
  return op;
}

}  // namespace

std::string_view to_string(HttpVerb verb) {
  switch (verb) {
    case HttpVerb::Get: return "get";
    case HttpVerb::Put: return "put";
    case HttpVerb::Post: return "post";
    case HttpVerb::Delete: return "delete";
    case HttpVerb::Options: return "options";
    case HttpVerb::Head: return "head";
    case HttpVerb::Patch: return "patch";
    case HttpVerb::Trace: return "trace";
  }
  return "get";
}

std::optional<HttpVerb> verb_from_string(std::string_view text) {
  for (HttpVerb verb : kAllVerbs) {
    if (to_string(verb) == text) return verb;
  }
  return std::nullopt;
}

std::string_view to_string(ParamLocation location) {
  switch (location) {
    case ParamLocation::Path: return "path";
    case ParamLocation::Query: return "query";
    case ParamLocation::Header: return "header";
    case ParamLocation::Cookie: return "cookie";
    case ParamLocation::Body: return "body";
    case ParamLocation::JsonBody: return "json_body";
  }
  return "query";
}

const ResponseDef* Operation::find_response(std::string_view status) const {
  for (const auto& r : responses) {
    if (r.status_code == status) return &r;
  }
  return nullptr;
}

const Operation* PathItem::find_operation(HttpVerb verb) const {
  for (const auto& op : operations) {
    if (op.verb == verb) return &op;
  }
  return nullptr;
}

const PathItem* ApiSpec::find_path(std::string_view path_template) const {
  for (const auto& item : paths) {
    if (item.path_template == path_template) return &item;
  }
  return nullptr;
}

std::size_t ApiSpec::operation_count() const {
  std::size_t n = 0;
  for (const auto& item : paths) n += item.operations.size();
  return n;
}

ApiSpec load_spec(const std::string& document_text, FormatHint hint) {
  if (document_text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ScanError(ErrorCode::MalformedDocument, "document is empty");
  }
  YAML::Node doc = parse_document(document_text, hint);
  if (!doc.IsMap()) {
    throw ScanError(ErrorCode::MalformedDocument, "document root is not a mapping");
  }
  YAML::Node version = doc["openapi"];
  if (!version || !version.IsScalar()) {
    throw ScanError(ErrorCode::UnsupportedVersion,
                    "missing 'openapi' field; only OpenAPI 3.x documents are supported");
  }
  ApiSpec spec;
  spec.openapi_version = version.Scalar();
  if (spec.openapi_version.rfind("3.", 0) != 0) {
    throw ScanError(ErrorCode::UnsupportedVersion,
                    "unsupported document version '" + spec.openapi_version + "'");
  }
  spec.raw_doc = doc;
  RefResolver refs(doc);
  if (YAML::Node security = doc["security"]; security) {
    spec.global_security = parse_security_list(security);
  }
  YAML::Node paths = doc["paths"];
  if (paths && !paths.IsMap() && !paths.IsNull()) {
    throw ScanError(ErrorCode::MalformedDocument, "'paths' is not a mapping");
  }
  if (!paths || paths.IsNull() || paths.size() == 0) {
    spec.warnings.push_back("specification declares no paths");
    return spec;
  }
  std::set<std::string> seen_paths;
  for (const auto& kv : paths) {
    const std::string path = kv.first.Scalar();
    if (path.empty() || path[0] != '/') {
      // Specification extensions (x-...) and malformed keys.
      if (path.rfind("x-", 0) != 0) {
        spec.warnings.push_back("path '" + path + "' does not begin with '/'; skipped");
      }
      continue;
    }
    if (!seen_paths.insert(path).second) {
      spec.warnings.push_back("duplicate path '" + path + "'; first kept");
      continue;
    }
    YAML::Node item_node = refs.resolve(kv.second);
    if (!item_node || !item_node.IsMap()) {
      spec.warnings.push_back("path item '" + path + "' is not a mapping; skipped");
      continue;
    }
    PathItem item;
    item.path_template = path;
    if (YAML::Node params = item_node["parameters"]; params && params.IsSequence()) {
      for (const auto& raw : params) {
        if (auto def = parse_parameter(raw, refs, path, spec.warnings)) {
          item.shared_parameters.push_back(std::move(*def));
        }
      }
      dedup_parameters(item.shared_parameters, path, spec.warnings);
    }
    for (HttpVerb verb : kAllVerbs) {
      YAML::Node op_node = item_node[std::string(to_string(verb))];
      if (!op_node || !op_node.IsMap()) continue;
      item.operations.push_back(parse_operation(verb, op_node, refs, path, spec.warnings));
    }
    if (item.operations.empty()) {
      spec.warnings.push_back("path item '" + path + "' defines no operations; dropped");
      continue;
    }
    spec.paths.push_back(std::move(item));
  }
  return spec;
}

namespace {

struct PathSortKey {
  struct Segment {
    bool parameterized;
    std::string text;
  };
  std::vector<Segment> segments;

  static PathSortKey from(const std::string& path) {
    PathSortKey key;
    std::size_t pos = 0;
    while (pos < path.size()) {
      if (path[pos] == '/') {
        ++pos;
        continue;
      }
      std::size_t next = path.find('/', pos);
      std::string seg = path.substr(pos, next == std::string::npos ? next : next - pos);
      key.segments.push_back({seg.find('{') != std::string::npos, std::move(seg)});
      pos = next == std::string::npos ? path.size() : next;
    }
    return key;
  }

  bool operator<(const PathSortKey& other) const {
    std::size_t n = std::min(segments.size(), other.segments.size());
    for (std::size_t i = 0; i < n; ++i) {
      const Segment& a = segments[i];
      const Segment& b = other.segments[i];
      if (a.parameterized != b.parameterized) return !a.parameterized;
      if (a.text != b.text) return a.text < b.text;
    }
    return segments.size() < other.segments.size();
  }
};

}  // namespace

std::vector<const PathItem*> ordered_endpoints(const ApiSpec& spec) {
  std::vector<std::pair<PathSortKey, const PathItem*>> decorated;
  decorated.reserve(spec.paths.size());
  for (const auto& item : spec.paths) {
    decorated.emplace_back(PathSortKey::from(item.path_template), &item);
  }
  std::stable_sort(decorated.begin(), decorated.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<const PathItem*> out;
  out.reserve(decorated.size());
  for (const auto& [key, item] : decorated) out.push_back(item);
  return out;
}

std::vector<SecurityRequirement> effective_security(const Operation& op, const ApiSpec& spec) {
  if (op.security.has_value()) return *op.security;
  if (spec.global_security.has_value()) return *spec.global_security;
  return {};
}

std::vector<ParameterDef> merged_parameters(const Operation& op, const PathItem& item) {
  std::vector<ParameterDef> merged;
  merged.reserve(item.shared_parameters.size() + op.parameters.size() +
                 op.body_parameters.size());
  for (const auto& shared : item.shared_parameters) {
    bool overridden = std::any_of(op.parameters.begin(), op.parameters.end(),
                                  [&](const ParameterDef& p) {
                                    return p.name == shared.name && p.location == shared.location;
                                  });
    if (!overridden) merged.push_back(shared);
  }
  merged.insert(merged.end(), op.parameters.begin(), op.parameters.end());
  merged.insert(merged.end(), op.body_parameters.begin(), op.body_parameters.end());
  return merged;
}

}  // namespace idorscan::model
