#include "idorscan/annotation.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace idorscan::annotation {

namespace {

std::string to_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool ci_ends_with(std::string_view s, std::string_view lowercase_suffix) {
  if (s.size() < lowercase_suffix.size()) return false;
  return to_lower(s.substr(s.size() - lowercase_suffix.size())) == lowercase_suffix;
}

bool ci_contains(std::string_view s, std::string_view lowercase_needle) {
  return to_lower(s).find(lowercase_needle) != std::string::npos;
}

constexpr std::array<std::string_view, 9> kActionVerbs = {
    "edit", "delete", "update", "get", "view", "remove", "create", "add", "set",
};

constexpr std::array<std::string_view, 6> kPersonalInfoWords = {
    "email", "e-mail", "phone", "mobile", "ssn", "passport",
};

bool is_action_verb(std::string_view segment) {
  std::string lower = to_lower(segment);
  return std::find(kActionVerbs.begin(), kActionVerbs.end(), lower) != kActionVerbs.end();
}

/// Keyword test for description/tags rules: tokenizes on non-alphanumerics
/// and fires on an exact "id" token or a token containing uuid/guid/
/// identifier. Substring matching on bare "id" would light up words like
/// "provide".
bool contains_id_keyword(std::string_view text) {
  std::string token;
  auto check = [&token]() {
    if (token.empty()) return false;
    if (token == "id") return true;
    return token.find("uuid") != std::string::npos ||
           token.find("guid") != std::string::npos ||
           token.find("identifier") != std::string::npos;
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      if (check()) return true;
      token.clear();
    }
  }
  return check();
}

std::string strip_id_suffix(std::string_view name) {
  if (ci_ends_with(name, "uuid") || ci_ends_with(name, "guid")) {
    return std::string(name.substr(0, name.size() - 4));
  }
  if (ci_ends_with(name, "_id")) {
    return std::string(name.substr(0, name.size() - 3));
  }
  if (ci_ends_with(name, "id") && name.size() > 2) {
    return std::string(name.substr(0, name.size() - 2));
  }
  return std::string(name);
}

bool passes_name_rules(std::string_view name) {
  if (ends_with(name, "ID") || ends_with(name, "_id") || ends_with(name, "Id")) return true;
  if (ci_ends_with(name, "uuid") || ci_ends_with(name, "guid")) return true;
  std::string lower = to_lower(name);
  return lower == "id" || lower == "uuid" || lower == "guid";
}

std::vector<std::string> split_path_segments(std::string_view path) {
  std::vector<std::string> segments;
  std::size_t pos = 0;
  while (pos < path.size()) {
    if (path[pos] == '/') {
      ++pos;
      continue;
    }
    std::size_t next = path.find('/', pos);
    segments.emplace_back(path.substr(pos, next == std::string_view::npos ? next : next - pos));
    pos = next == std::string_view::npos ? path.size() : next;
  }
  return segments;
}

bool is_placeholder(std::string_view segment) {
  return !segment.empty() && segment.front() == '{' && segment.back() == '}';
}

/// True when the schema pattern is a regex that accepts canonical UUIDs but
/// rejects short numeric ids. Used by the non-paper-exact type extension.
bool pattern_accepts_uuid(const std::string& pattern) {
  try {
    std::regex re(pattern);
    static const char* kLowerSample = "123e4567-e89b-12d3-a456-426614174000";
    static const char* kUpperSample = "123E4567-E89B-12D3-A456-426614174000";
    bool accepts = std::regex_match(kLowerSample, re) || std::regex_match(kUpperSample, re);
    return accepts && !std::regex_match("12345", re);
  } catch (const std::regex_error&) {
    return false;
  }
}

}  // namespace

std::string_view to_string(VerbCoverage coverage) {
  switch (coverage) {
    case VerbCoverage::All: return "All";
    case VerbCoverage::Multiple: return "Multiple";
    case VerbCoverage::Single: return "Single";
  }
  return "Single";
}

std::string_view to_string(IdentifierCount count) {
  switch (count) {
    case IdentifierCount::Zero: return "zero";
    case IdentifierCount::Single: return "single";
    case IdentifierCount::Multiple: return "multiple";
  }
  return "zero";
}

std::string_view to_string(IdType type) {
  switch (type) {
    case IdType::Numeric: return "numeric";
    case IdType::Uuid: return "UUID";
    case IdType::PersonalInfo: return "personal_info";
    case IdType::Array: return "array";
    case IdType::String: return "string";
    case IdType::Other: return "other";
    case IdType::None: return "none";
  }
  return "none";
}

std::string normalize_resource_name(std::string_view name) {
  std::string lower = to_lower(name);
  if (lower.size() > 4 && ends_with(lower, "es")) {
    lower.resize(lower.size() - 2);
  } else if (lower.size() > 3 && ends_with(lower, "s")) {
    lower.resize(lower.size() - 1);
  }
  return lower;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t next_diag = row[j];
      std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + cost});
      diag = next_diag;
    }
  }
  return row[b.size()];
}

bool names_similar(std::string_view a, std::string_view b) {
  std::string na = normalize_resource_name(a);
  std::string nb = normalize_resource_name(b);
  if (na.empty() || nb.empty()) return false;
  if (na.find(nb) != std::string::npos || nb.find(na) != std::string::npos) return true;
  return edit_distance(na, nb) <= 2;
}

bool ProducerIndex::produced_elsewhere(const std::string& key,
                                       const std::string& consumer_path) const {
  auto it = producers.find(key);
  if (it == producers.end()) return false;
  for (const auto& producer : it->second) {
    if (producer != consumer_path) return true;
  }
  return false;
}

IdentifierDictionary IdentifierDictionary::builtin() {
  IdentifierDictionary dict;
  for (std::string_view word : {"name", "filename", "group", "key", "phone", "email"}) {
    dict.add_word(word);
    dict.add_word(std::string(word) + "s");
  }
  return dict;
}

void IdentifierDictionary::add_word(std::string_view word) {
  std::string lower = to_lower(word);
  if (!lower.empty()) words_.insert(std::move(lower));
}

bool IdentifierDictionary::contains(std::string_view lowercase_name) const {
  return words_.find(lowercase_name) != words_.end();
}

VerbCoverage classify_verbs(const model::PathItem& item) {
  if (item.operations.size() >= model::kAllVerbs.size()) return VerbCoverage::All;
  if (item.operations.size() == 1) return VerbCoverage::Single;
  return VerbCoverage::Multiple;
}

ProducerIndex build_producer_index(const model::ApiSpec& spec) {
  ProducerIndex index;
  // Structural rule: /buckets producing for /buckets/{bucketID}. A consumer
  // is a path that equals some other path plus one trailing placeholder
  // segment, so the producer can be found by exact prefix lookup.
  std::map<std::string, std::string> literal_tail_paths;  // template -> last segment
  for (const auto& item : spec.paths) {
    auto segs = split_path_segments(item.path_template);
    if (!segs.empty() && !is_placeholder(segs.back())) {
      literal_tail_paths[item.path_template] = segs.back();
    }
  }
  for (const auto& consumer : spec.paths) {
    auto csegs = split_path_segments(consumer.path_template);
    if (csegs.size() < 2 || !is_placeholder(csegs.back())) continue;
    std::size_t cut = consumer.path_template.rfind('/');
    if (cut == std::string::npos || cut == 0) continue;
    auto it = literal_tail_paths.find(consumer.path_template.substr(0, cut));
    if (it == literal_tail_paths.end()) continue;
    std::string param_name = csegs.back().substr(1, csegs.back().size() - 2);
    if (names_similar(it->second, param_name)) {
      index.producers[normalize_resource_name(it->second)].insert(it->first);
    }
  }
  // Response-scan rule: 2xx bodies exposing id-named properties.
  for (const auto& item : spec.paths) {
    auto segs = split_path_segments(item.path_template);
    std::string resource;
    for (auto it = segs.rbegin(); it != segs.rend(); ++it) {
      if (!is_placeholder(*it)) {
        resource = *it;
        break;
      }
    }
    if (resource.empty()) continue;
    for (const auto& op : item.operations) {
      bool produces = std::any_of(op.success_body_properties.begin(),
                                  op.success_body_properties.end(), passes_name_rules);
      if (produces) {
        index.producers[normalize_resource_name(resource)].insert(item.path_template);
        break;
      }
    }
  }
  return index;
}

std::pair<bool, std::optional<std::string>> detect_identifier(
    const model::ParameterDef& p, const std::string& path, const ProducerIndex& producers,
    const IdentifierDictionary& dictionary) {
  const std::string& name = p.name;
  if (ends_with(name, "ID") || ends_with(name, "_id") || ends_with(name, "Id")) {
    return {true, "name-suffix-id"};
  }
  if (ci_ends_with(name, "uuid") || ci_ends_with(name, "guid")) {
    return {true, "name-suffix-uuid"};
  }
  const std::string lower = to_lower(name);
  if (lower == "id" || lower == "uuid" || lower == "guid") {
    return {true, "name-equality"};
  }
  if (dictionary.contains(lower)) {
    return {true, "dictionary"};
  }
  for (const std::string& stem : {normalize_resource_name(name),
                                  normalize_resource_name(strip_id_suffix(name))}) {
    if (!stem.empty() && producers.produced_elsewhere(stem, path)) {
      return {true, "producer-index"};
    }
  }
  if (p.location == model::ParamLocation::Path) {
    auto segs = split_path_segments(path);
    const std::string placeholder = "{" + name + "}";
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (segs[i] != placeholder) continue;
      if (i >= 1 && !is_placeholder(segs[i - 1]) && names_similar(segs[i - 1], name)) {
        return {true, "path-preceding-segment"};
      }
      if (i >= 2 && !is_placeholder(segs[i - 1]) && is_action_verb(segs[i - 1]) &&
          !is_placeholder(segs[i - 2]) && names_similar(segs[i - 2], name)) {
        return {true, "path-action-verb"};
      }
      if (i == 0) {
        return {true, "path-leading-position"};
      }
      break;
    }
  }
  if (p.description && contains_id_keyword(*p.description)) {
    return {true, "description-keyword"};
  }
  for (const auto& tag : p.tags) {
    if (contains_id_keyword(tag)) {
      return {true, "tags-keyword"};
    }
  }
  return {false, std::nullopt};
}

IdType infer_id_type(const model::ParameterDef& p, bool paper_exact) {
  if (p.schema_type == model::SchemaType::Integer) return IdType::Numeric;
  if (p.schema_type == model::SchemaType::String) {
    if (ci_contains(p.name, "uuid") || ci_contains(p.name, "guid")) return IdType::Uuid;
    if (!paper_exact && p.schema_pattern && pattern_accepts_uuid(*p.schema_pattern)) {
      return IdType::Uuid;
    }
  }
  if (p.schema_type == model::SchemaType::Array) return IdType::Array;
  if (p.schema_type == model::SchemaType::String) {
    for (std::string_view word : kPersonalInfoWords) {
      if (ci_contains(p.name, word)) return IdType::PersonalInfo;
    }
    return IdType::String;
  }
  return IdType::Other;
}

MethodProperties method_properties(const model::Operation& op, const model::PathItem& item,
                                   const model::ApiSpec& spec,
                                   const std::vector<AnnotatedSpec::ParamRecord>& params) {
  (void)item;
  MethodProperties mp;
  mp.operation_only_parameters_specified = !op.parameters.empty();
  mp.parameters_required =
      std::any_of(params.begin(), params.end(), [](const auto& r) { return r.def.required; });
  mp.has_body = op.has_request_body;
  std::size_t ids = static_cast<std::size_t>(
      std::count_if(params.begin(), params.end(), [](const auto& r) { return r.props.is_identifier; }));
  mp.identifiers_used = ids == 0   ? IdentifierCount::Zero
                        : ids == 1 ? IdentifierCount::Single
                                   : IdentifierCount::Multiple;
  mp.authorization_required = !model::effective_security(op, spec).empty();
  return mp;
}

namespace {

AnnotatedSpec::EndpointRecord annotate_endpoint(const model::PathItem& item,
                                                const model::ApiSpec& spec,
                                                const ProducerIndex& producers,
                                                const IdentifierDictionary& dictionary,
                                                const AnnotateOptions& options) {
  AnnotatedSpec::EndpointRecord record;
  record.path = item.path_template;
  record.item = &item;
  record.props.defined_http_verbs = classify_verbs(item);
  for (const auto& op : item.operations) {
    AnnotatedSpec::OperationRecord orec;
    orec.verb = op.verb;
    orec.op = &op;
    for (auto& def : model::merged_parameters(op, item)) {
      auto [is_id, rule] = detect_identifier(def, item.path_template, producers, dictionary);
      ParameterProperties props;
      props.is_identifier = is_id;
      props.location = def.location;
      props.id_type = is_id ? infer_id_type(def, options.paper_exact) : IdType::None;
      props.matched_rule = rule;
      orec.params.push_back({std::move(def), props});
    }
    orec.props = method_properties(op, item, spec, orec.params);
    record.operations.push_back(std::move(orec));
  }
  return record;
}

AnnotatedSpec annotate_impl(std::shared_ptr<const model::ApiSpec> spec,
                            const AnnotateOptions& options, bool parallel) {
  AnnotatedSpec annotated;
  annotated.spec = spec;
  auto ordered = model::ordered_endpoints(*spec);
  ProducerIndex producers = build_producer_index(*spec);
  IdentifierDictionary dictionary = IdentifierDictionary::builtin();
  for (const auto& word : options.extra_dictionary_words) dictionary.add_word(word);

  annotated.endpoints.resize(ordered.size());
  const auto n = static_cast<std::ptrdiff_t>(ordered.size());
  if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      annotated.endpoints[static_cast<std::size_t>(i)] = annotate_endpoint(
          *ordered[static_cast<std::size_t>(i)], *spec, producers, dictionary, options);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      annotated.endpoints[static_cast<std::size_t>(i)] = annotate_endpoint(
          *ordered[static_cast<std::size_t>(i)], *spec, producers, dictionary, options);
    }
  }
  return annotated;
}

}  // namespace

AnnotatedSpec annotate(std::shared_ptr<const model::ApiSpec> spec,
                       const AnnotateOptions& options) {
#ifdef _OPENMP
  return annotate_parallel(std::move(spec), options);
#else
  return annotate_serial(std::move(spec), options);
#endif
}

AnnotatedSpec annotate_serial(std::shared_ptr<const model::ApiSpec> spec,
                              const AnnotateOptions& options) {
  return annotate_impl(std::move(spec), options, false);
}

AnnotatedSpec annotate_parallel(std::shared_ptr<const model::ApiSpec> spec,
                                const AnnotateOptions& options) {
  return annotate_impl(std::move(spec), options, true);
}

const AnnotatedSpec::EndpointRecord* AnnotatedSpec::find_endpoint(std::string_view path) const {
  for (const auto& e : endpoints) {
    if (e.path == path) return &e;
  }
  return nullptr;
}

const AnnotatedSpec::OperationRecord* AnnotatedSpec::find_operation(std::string_view path,
                                                                    model::HttpVerb verb) const {
  const EndpointRecord* endpoint = find_endpoint(path);
  if (!endpoint) return nullptr;
  for (const auto& op : endpoint->operations) {
    if (op.verb == verb) return &op;
  }
  return nullptr;
}

const AnnotatedSpec::ParamRecord* AnnotatedSpec::find_parameter(
    std::string_view path, model::HttpVerb verb, std::string_view name,
    model::ParamLocation location) const {
  const OperationRecord* op = find_operation(path, verb);
  if (!op) return nullptr;
  for (const auto& param : op->params) {
    if (param.def.name == name && param.def.location == location) return &param;
  }
  return nullptr;
}

std::size_t AnnotatedSpec::operation_count() const {
  std::size_t n = 0;
  for (const auto& e : endpoints) n += e.operations.size();
  return n;
}

}  // namespace idorscan::annotation
