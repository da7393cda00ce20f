#include "idorscan/corpus_gen.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "idorscan/attack_rules.hpp"
#include "idorscan/doc_convert.hpp"
#include "idorscan/errors.hpp"

namespace idorscan::corpus {

namespace {

const std::vector<std::string> kResourceNouns = {
    "order",   "invoice",  "ticket",   "article",  "vault",    "bucket",  "account",
    "profile", "document", "report",   "project",  "customer", "employee", "product",
    "session", "image",    "video",    "payment",  "subscription", "license", "device",
    "sensor",  "webhook",  "message",  "channel",  "folder",   "snippet", "badge",
    "review",  "comment",  "student",  "course",   "booking",  "shipment", "warehouse",
    "contract", "policy",  "claim",    "asset",    "coupon",
};

std::string capitalize(const std::string& word) {
  std::string out = word;
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

/// Hands out unique resource nouns in a seed-determined order.
class NounPool {
 public:
  explicit NounPool(std::uint64_t seed) : nouns_(kResourceNouns) {
    std::mt19937_64 rng(seed);
    std::shuffle(nouns_.begin(), nouns_.end(), rng);
  }

  std::string next() {
    if (next_ < nouns_.size()) return nouns_[next_++];
    std::size_t round = next_ / nouns_.size();
    std::string noun = nouns_[next_ % nouns_.size()] + std::to_string(round + 1);
    ++next_;
    return noun;
  }

 private:
  std::vector<std::string> nouns_;
  std::size_t next_ = 0;
};

YAML::Node string_node(const std::string& value) {
  YAML::Node node(value);
  return node;
}

YAML::Node make_responses(bool authorized) {
  YAML::Node responses(YAML::NodeType::Map);
  auto add = [&responses](const char* code, const char* description) {
    YAML::Node response(YAML::NodeType::Map);
    response["description"] = description;
    YAML::Node key = string_node(code);
    key.SetTag("!");  // keep status keys quoted on emission
    responses[key] = response;
  };
  add("200", "OK");
  if (authorized) {
    add("401", "Unauthorized");
    add("403", "Forbidden");
  }
  add("404", "Not found");
  return responses;
}

YAML::Node make_security() {
  YAML::Node security(YAML::NodeType::Sequence);
  YAML::Node requirement(YAML::NodeType::Map);
  requirement["ApiKeyAuth"] = YAML::Node(YAML::NodeType::Sequence);
  security.push_back(requirement);
  return security;
}

YAML::Node make_operation(const std::string& operation_id, bool authorized) {
  YAML::Node op(YAML::NodeType::Map);
  op["operationId"] = operation_id;
  op["responses"] = make_responses(authorized);
  if (authorized) op["security"] = make_security();
  return op;
}

YAML::Node make_parameter(const std::string& name, const std::string& in,
                          const std::string& schema_type, bool required,
                          const std::string& description = {}) {
  YAML::Node param(YAML::NodeType::Map);
  param["name"] = name;
  param["in"] = in;
  if (!description.empty()) param["description"] = description;
  param["required"] = required;
  YAML::Node schema(YAML::NodeType::Map);
  schema["type"] = schema_type;
  if (schema_type == "array") {
    YAML::Node items(YAML::NodeType::Map);
    items["type"] = "string";
    schema["items"] = items;
  }
  param["schema"] = schema;
  return param;
}

YAML::Node make_json_body(const std::string& property, const std::string& schema_type) {
  YAML::Node body(YAML::NodeType::Map);
  body["required"] = true;
  YAML::Node schema(YAML::NodeType::Map);
  schema["type"] = "object";
  YAML::Node required(YAML::NodeType::Sequence);
  required.push_back(property);
  schema["required"] = required;
  YAML::Node properties(YAML::NodeType::Map);
  YAML::Node prop(YAML::NodeType::Map);
  prop["type"] = schema_type;
  properties[property] = prop;
  schema["properties"] = properties;
  YAML::Node content(YAML::NodeType::Map);
  YAML::Node media(YAML::NodeType::Map);
  media["schema"] = schema;
  content["application/json"] = media;
  body["content"] = content;
  return body;
}

/// Defines every verb so the endpoint's coverage is All, which keeps the
/// verb-tampering group from co-firing on identifier plants. Parameters sit
/// at endpoint level so all operations share one set.
YAML::Node all_verbs_item(const std::string& noun, const YAML::Node& shared_params,
                          const YAML::Node& request_body) {
  YAML::Node item(YAML::NodeType::Map);
  if (shared_params.IsDefined() && shared_params.IsSequence() && shared_params.size() > 0) {
    item["parameters"] = shared_params;
  }
  for (model::HttpVerb verb : model::kAllVerbs) {
    YAML::Node op = make_operation(std::string(model::to_string(verb)) + capitalize(noun), true);
    if (request_body.IsDefined() && request_body.IsMap()) {
      op["requestBody"] = request_body;
    }
    item[std::string(model::to_string(verb))] = op;
  }
  return item;
}

struct PlantTemplate {
  std::string path;
  YAML::Node item;
  std::vector<std::string> identifiers;
  std::vector<std::string> expected_techniques;
};

std::vector<std::string> with_token(std::vector<std::string> techniques) {
  techniques.emplace_back(rules::kTokenManipulation);
  return techniques;
}

PlantTemplate build_plant(const std::string& technique, const std::string& noun) {
  using namespace rules;
  const std::string plural = noun + "s";
  PlantTemplate plant;
  YAML::Node none;
  if (technique == kEnumerationDumb) {
    const std::string id = noun + "Id";
    plant.path = "/" + plural + "/{" + id + "}";
    YAML::Node params(YAML::NodeType::Sequence);
    params.push_back(make_parameter(id, "path", "integer", true));
    plant.item = all_verbs_item(noun, params, none);
    plant.identifiers = {id};
    plant.expected_techniques = with_token({std::string(kEnumerationDumb)});
  } else if (technique == kEnumerationApriori) {
    const std::string id = noun + "Uuid";
    plant.path = "/" + plural + "/{" + id + "}";
    YAML::Node params(YAML::NodeType::Sequence);
    params.push_back(make_parameter(id, "path", "string", true));
    plant.item = all_verbs_item(noun, params, none);
    plant.identifiers = {id};
    plant.expected_techniques = with_token({std::string(kEnumerationApriori)});
  } else if (technique == kWildcard || technique == kFileExtension ||
             technique == kEncoding) {
    // String identifiers co-fire the four string enumeration variants;
    // a number-typed identifier isolates encoding/decoding.
    if (technique == kEncoding) {
      const std::string id = noun + "Id";
      plant.path = "/" + plural + "/{" + id + "}";
      YAML::Node params(YAML::NodeType::Sequence);
      params.push_back(make_parameter(id, "path", "number", true));
      plant.item = all_verbs_item(noun, params, none);
      plant.identifiers = {id};
      plant.expected_techniques = with_token({std::string(kEncoding)});
    } else {
      const std::string id = noun + "Key";
      plant.path = "/" + plural + "/{" + id + "}";
      YAML::Node params(YAML::NodeType::Sequence);
      params.push_back(make_parameter(id, "path", "string", true));
      plant.item = all_verbs_item(noun, params, none);
      plant.identifiers = {id};
      plant.expected_techniques =
          with_token({std::string(kEnumerationApriori), std::string(kFileExtension),
                      std::string(kWildcard), std::string(kEncoding)});
    }
  } else if (technique == kListAppending) {
    plant.path = "/" + plural;
    YAML::Node params(YAML::NodeType::Sequence);
    params.push_back(
        make_parameter("ids", "query", "array", true, "Identifiers of the requested items"));
    plant.item = all_verbs_item(noun, params, none);
    plant.identifiers = {"ids"};
    plant.expected_techniques = with_token({std::string(kListAppending)});
  } else if (technique == kTokenManipulation) {
    plant.path = "/" + plural;
    YAML::Node item(YAML::NodeType::Map);
    item["get"] = make_operation("list" + capitalize(plural), true);
    plant.item = item;
    plant.expected_techniques = {std::string(kTokenManipulation)};
  } else if (technique == kParameterPollution) {
    const std::string id = noun + "Id";
    plant.path = "/" + plural + "/{" + id + "}";
    YAML::Node params(YAML::NodeType::Sequence);
    params.push_back(make_parameter(id, "path", "integer", true));
    plant.item = all_verbs_item(noun, params, make_json_body(id, "integer"));
    plant.identifiers = {id};
    plant.expected_techniques = with_token(
        {std::string(kParameterPollution), std::string(kEnumerationDumb)});
  } else if (technique == kAddingParameters) {
    plant.path = "/" + plural;
    YAML::Node item(YAML::NodeType::Map);
    YAML::Node get = make_operation("list" + capitalize(plural), true);
    YAML::Node get_params(YAML::NodeType::Sequence);
    get_params.push_back(make_parameter("filter", "query", "string", false));
    get["parameters"] = get_params;
    YAML::Node post = make_operation("create" + capitalize(noun), true);
    YAML::Node post_params(YAML::NodeType::Sequence);
    post_params.push_back(make_parameter("mode", "query", "string", false));
    post["parameters"] = post_params;
    item["get"] = get;
    item["post"] = post;
    plant.item = item;
    plant.expected_techniques = with_token({std::string(kAddingParameters)});
  } else if (technique == kChangeMethod) {
    // No authorization: verb tampering is the only group that fires
    // without it.
    const std::string id = noun + "Id";
    plant.path = "/" + plural + "/{" + id + "}";
    YAML::Node item(YAML::NodeType::Map);
    YAML::Node params(YAML::NodeType::Sequence);
    params.push_back(make_parameter(id, "path", "integer", true));
    item["parameters"] = params;
    item["get"] = make_operation("get" + capitalize(noun), false);
    plant.item = item;
    plant.identifiers = {id};
    plant.expected_techniques = {std::string(kChangeMethod)};
  } else {
    throw ScanError(ErrorCode::InvalidPlan, "unknown technique '" + technique + "'");
  }
  return plant;
}

PlantTemplate build_clean(const std::string& noun) {
  PlantTemplate clean;
  clean.path = "/" + noun + "s";
  YAML::Node item(YAML::NodeType::Map);
  YAML::Node op(YAML::NodeType::Map);
  op["operationId"] = "list" + capitalize(noun) + "s";
  YAML::Node responses(YAML::NodeType::Map);
  YAML::Node ok(YAML::NodeType::Map);
  ok["description"] = "OK";
  YAML::Node key = string_node("200");
  key.SetTag("!");
  responses[key] = ok;
  op["responses"] = responses;
  item["get"] = op;
  clean.item = item;
  return clean;
}

}  // namespace

CorpusPlan load_plan(const std::string& document_text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(document_text);
  } catch (const YAML::Exception& e) {
    throw ScanError(ErrorCode::InvalidPlan, std::string("plan parse error: ") + e.what());
  }
  if (!doc.IsMap()) {
    throw ScanError(ErrorCode::InvalidPlan, "plan root is not a mapping");
  }
  CorpusPlan plan;
  if (YAML::Node seed = doc["seed"]; seed && seed.IsScalar()) {
    plan.seed = seed.as<std::uint64_t>(0);
  }
  if (YAML::Node clean = doc["clean_count"]; clean && clean.IsScalar()) {
    long long value = clean.as<long long>(0);
    if (value < 0) throw ScanError(ErrorCode::InvalidPlan, "clean_count must be non-negative");
    plan.clean_count = static_cast<std::size_t>(value);
  }
  if (YAML::Node plants = doc["plants"]; plants && plants.IsSequence()) {
    for (const auto& entry : plants) {
      if (!entry.IsMap() || !entry["technique"]) {
        throw ScanError(ErrorCode::InvalidPlan, "plant entries need a 'technique' key");
      }
      PlantSpec spec;
      spec.technique = entry["technique"].Scalar();
      if (!rules::find_pattern(spec.technique)) {
        throw ScanError(ErrorCode::InvalidPlan, "unknown technique '" + spec.technique + "'");
      }
      long long count = entry["count"] ? entry["count"].as<long long>(1) : 1;
      if (count < 0) throw ScanError(ErrorCode::InvalidPlan, "plant count must be non-negative");
      spec.count = static_cast<std::size_t>(count);
      plan.plants.push_back(std::move(spec));
    }
  }
  return plan;
}

GeneratedCorpus generate(const CorpusPlan& plan) {
  NounPool nouns(plan.seed);
  YAML::Node doc(YAML::NodeType::Map);
  doc["openapi"] = "3.0.3";
  YAML::Node info(YAML::NodeType::Map);
  info["title"] = "Generated validation corpus";
  info["version"] = "1.0.0";
  doc["info"] = info;
  YAML::Node paths(YAML::NodeType::Map);
  YAML::Node truth(YAML::NodeType::Map);

  auto record = [&paths, &truth](const PlantTemplate& plant) {
    paths[plant.path] = plant.item;
    YAML::Node entry(YAML::NodeType::Map);
    YAML::Node ids(YAML::NodeType::Sequence);
    for (const auto& id : plant.identifiers) ids.push_back(id);
    entry["identifiers"] = ids;
    YAML::Node techniques(YAML::NodeType::Sequence);
    for (const auto& t : plant.expected_techniques) techniques.push_back(t);
    entry["expected_techniques"] = techniques;
    truth[plant.path] = entry;
  };

  for (const auto& plant_spec : plan.plants) {
    for (std::size_t i = 0; i < plant_spec.count; ++i) {
      record(build_plant(plant_spec.technique, nouns.next()));
    }
  }
  for (std::size_t i = 0; i < plan.clean_count; ++i) {
    record(build_clean(nouns.next()));
  }
  doc["paths"] = paths;

  YAML::Node components(YAML::NodeType::Map);
  YAML::Node schemes(YAML::NodeType::Map);
  YAML::Node api_key(YAML::NodeType::Map);
  api_key["type"] = "apiKey";
  api_key["in"] = "header";
  api_key["name"] = "X-Api-Key";
  schemes["ApiKeyAuth"] = api_key;
  components["securitySchemes"] = schemes;
  doc["components"] = components;

  GeneratedCorpus corpus;
  corpus.spec_text = emit_yaml(doc);
  corpus.truth_text = emit_yaml(truth);
  return corpus;
}

}  // namespace idorscan::corpus
