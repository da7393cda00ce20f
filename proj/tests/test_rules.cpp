#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "idorscan/annotation.hpp"
#include "idorscan/attack_rules.hpp"
#include "idorscan/corpus_gen.hpp"
#include "idorscan/model.hpp"
#include "idorscan/reporting.hpp"
#include "test_support.hpp"

using namespace idorscan;
using namespace idorscan::rules;
using annotation::AnnotatedSpec;
using annotation::IdentifierCount;
using annotation::IdType;
using annotation::MethodProperties;
using annotation::ParameterProperties;
using test_support::fixture_path;
using test_support::read_file;

namespace {

AttackReport scan_text(const std::string& text, bool paper_exact = false) {
  auto spec = test_support::load_shared(text);
  annotation::AnnotateOptions annotate_options;
  annotate_options.paper_exact = paper_exact;
  auto annotated = annotation::annotate(spec, annotate_options);
  return evaluate(annotated, {.paper_exact = paper_exact});
}

std::set<std::string> fired_techniques(const AttackReport& report, const std::string& path) {
  std::set<std::string> out;
  for (const auto& entry : report.entries) {
    if (entry.path != path) continue;
    for (const auto& finding : entry.attacks) {
      out.insert(finding.techniques.begin(), finding.techniques.end());
    }
  }
  return out;
}

MethodProperties auth_method(IdentifierCount ids = IdentifierCount::Single) {
  MethodProperties mp;
  mp.authorization_required = true;
  mp.identifiers_used = ids;
  mp.parameters_required = true;
  return mp;
}

ParameterProperties id_param(IdType type) {
  ParameterProperties pp;
  pp.is_identifier = true;
  pp.id_type = type;
  pp.location = model::ParamLocation::Path;
  return pp;
}

}  // namespace

TEST_CASE("catalog ships 10 techniques in 4 groups") {
  const auto& patterns = catalog();
  CHECK(patterns.size() == 10);
  std::set<AttackGroup> groups;
  std::set<std::string> names;
  for (const auto& p : patterns) {
    groups.insert(p.group);
    CHECK(names.insert(p.technique).second);
    CHECK_FALSE(p.description.empty());
  }
  CHECK(groups.size() == 4);
}

TEST_CASE("vault endpoint yields token manipulation, verb tampering and enumeration") {
  AttackReport report = scan_text(read_file(fixture_path("vaults.yaml")));
  REQUIRE(report.entries.size() == 1);
  const auto& entry = report.entries[0];
  CHECK(entry.path == "/vaults/{vaultUuid}");
  REQUIRE(entry.attacks.size() == 3);

  CHECK(entry.attacks[0].name == "Authorization token manipulation");
  CHECK(entry.attacks[1].name == "Endpoint verb tampering");
  CHECK(entry.attacks[2].name == "Enumeration");

  const auto& enumeration = entry.attacks[2];
  CHECK(enumeration.check_rule == "Operation uses parameters AND operation has identifiers");
  CHECK(enumeration.targeted_operation == "get");
  REQUIRE(enumeration.targeted_parameters.size() == 1);
  const auto& target = enumeration.targeted_parameters[0];
  CHECK(target.display_name == "vaultUuid");
  CHECK(target.attacks == std::vector<std::string>{"Enumeration with a priori knowledge"});
  CHECK(target.forbidden_response_declared);
  CHECK(target.additional_check_rule == "Identifier's type is UUID");
  CHECK(enumeration.expected_response_declared);
  CHECK(enumeration.unexpected_response_codes == std::vector<std::string>{"200", "401", "404"});
}

TEST_CASE("no findings without authorization or identifiers") {
  AttackReport report = scan_text(
      "openapi: \"3.0.0\"\n"
      "paths:\n"
      "  /status:\n"
      "    get:\n"
      "      parameters:\n"
      "        - {name: verbose, in: query, schema: {type: boolean}}\n"
      "      responses: {\"200\": {description: OK}}\n");
  CHECK(report.entries.empty());
}

TEST_CASE("two-operation endpoint with differing parameter sets fires parameter borrowing") {
  AttackReport report = scan_text(
      "openapi: \"3.0.0\"\n"
      "paths:\n"
      "  /reports:\n"
      "    get:\n"
      "      security: [{ApiKey: []}]\n"
      "      parameters:\n"
      "        - {name: filter, in: query, schema: {type: string}}\n"
      "      responses: {\"200\": {description: OK}}\n"
      "    post:\n"
      "      parameters:\n"
      "        - {name: mode, in: query, schema: {type: string}}\n"
      "      responses: {\"201\": {description: Created}}\n"
      "components:\n"
      "  securitySchemes:\n"
      "    ApiKey: {type: apiKey, in: header, name: X-Key}\n");
  auto techniques = fired_techniques(report, "/reports");
  CHECK(techniques.count(std::string(kAddingParameters)) == 1);
  bool found_pair = false;
  for (const auto& entry : report.entries) {
    for (const auto& finding : entry.attacks) {
      if (finding.targeted_operation == "get+post") {
        found_pair = true;
        REQUIRE(finding.targeted_parameters.size() == 1);
        CHECK(finding.targeted_parameters[0].name == "mode");
        CHECK(finding.targeted_parameters[0].additional_check_rule ==
              "Parameter is defined for post but not for get");
      }
    }
  }
  CHECK(found_pair);
}

TEST_CASE("enumeration_techniques per identifier type") {
  using V = std::vector<std::string>;
  CHECK(enumeration_techniques(IdType::Numeric, false) == V{std::string(kEnumerationDumb)});
  CHECK(enumeration_techniques(IdType::Uuid, false) == V{std::string(kEnumerationApriori)});
  CHECK(enumeration_techniques(IdType::PersonalInfo, false) ==
        V{std::string(kEnumerationApriori)});
  CHECK(enumeration_techniques(IdType::String, false) ==
        V{std::string(kEnumerationApriori), std::string(kFileExtension), std::string(kWildcard),
          std::string(kEncoding)});
  CHECK(enumeration_techniques(IdType::Array, false) == V{std::string(kListAppending)});
  CHECK(enumeration_techniques(IdType::Other, false) == V{std::string(kEncoding)});
  CHECK(enumeration_techniques(IdType::None, false).empty());
  // paper-exact drops the type gate on extension and encoding
  CHECK(enumeration_techniques(IdType::Numeric, true) ==
        V{std::string(kEnumerationDumb), std::string(kFileExtension), std::string(kEncoding)});
  CHECK(enumeration_techniques(IdType::Array, true) ==
        V{std::string(kFileExtension), std::string(kEncoding), std::string(kListAppending)});
}

TEST_CASE("eval_enumeration gate") {
  CHECK(eval_enumeration(auth_method(), id_param(IdType::Uuid)) ==
        std::vector<std::string>{std::string(kEnumerationApriori)});
  MethodProperties no_auth = auth_method();
  no_auth.authorization_required = false;
  CHECK(eval_enumeration(no_auth, id_param(IdType::Uuid)).empty());
  CHECK(eval_enumeration(auth_method(), id_param(IdType::Array)) ==
        std::vector<std::string>{std::string(kListAppending)});
  ParameterProperties not_id;
  CHECK(eval_enumeration(auth_method(), not_id).empty());
}

TEST_CASE("eval_token_manipulation mirrors effective security") {
  CHECK(eval_token_manipulation(auth_method()));
  MethodProperties disabled;
  disabled.authorization_required = false;
  CHECK_FALSE(eval_token_manipulation(disabled));

  // Inheritance and explicit override through the full pipeline.
  AttackReport report = scan_text(
      "openapi: \"3.0.0\"\n"
      "security: [{ApiKey: []}]\n"
      "paths:\n"
      "  /inherited:\n"
      "    get: {responses: {\"200\": {description: OK}}}\n"
      "  /disabled:\n"
      "    get:\n"
      "      security: []\n"
      "      responses: {\"200\": {description: OK}}\n");
  CHECK(fired_techniques(report, "/inherited").count(std::string(kTokenManipulation)) == 1);
  CHECK(fired_techniques(report, "/disabled").empty());
}

TEST_CASE("eval_parameter_pollution pairs") {
  using ParamRecord = AnnotatedSpec::ParamRecord;
  auto rec = [](std::string name, model::ParamLocation location, bool is_id) {
    ParamRecord r;
    r.def.name = std::move(name);
    r.def.location = location;
    r.props.is_identifier = is_id;
    r.props.location = location;
    r.props.id_type = is_id ? IdType::Numeric : IdType::None;
    return r;
  };
  SUBCASE("path + json body pair fires") {
    std::vector<ParamRecord> params = {rec("userId", model::ParamLocation::Path, true),
                                       rec("userId", model::ParamLocation::JsonBody, true)};
    auto pairs = eval_parameter_pollution(auth_method(IdentifierCount::Multiple), params);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0] == std::pair<std::size_t, std::size_t>{0, 1});
  }
  SUBCASE("single parameter cannot pair") {
    std::vector<ParamRecord> params = {rec("userId", model::ParamLocation::Path, true)};
    CHECK(eval_parameter_pollution(auth_method(IdentifierCount::Multiple), params).empty());
  }
  SUBCASE("same location never pairs") {
    std::vector<ParamRecord> params = {rec("userId", model::ParamLocation::Query, true),
                                       rec("userId", model::ParamLocation::Query, true)};
    CHECK(eval_parameter_pollution(auth_method(IdentifierCount::Multiple), params).empty());
  }
  SUBCASE("header locations are not tamper targets") {
    std::vector<ParamRecord> params = {rec("userId", model::ParamLocation::Header, true),
                                       rec("userId", model::ParamLocation::JsonBody, true)};
    CHECK(eval_parameter_pollution(auth_method(IdentifierCount::Multiple), params).empty());
  }
  SUBCASE("requires multiple identifiers and authorization") {
    std::vector<ParamRecord> params = {rec("userId", model::ParamLocation::Path, true),
                                       rec("userId", model::ParamLocation::JsonBody, false)};
    CHECK(eval_parameter_pollution(auth_method(IdentifierCount::Single), params).empty());
    MethodProperties no_auth = auth_method(IdentifierCount::Multiple);
    no_auth.authorization_required = false;
    CHECK(eval_parameter_pollution(no_auth, params).empty());
    CHECK_FALSE(eval_parameter_pollution(auth_method(IdentifierCount::Multiple), params).empty());
  }
}

TEST_CASE("verb tampering: single-verb endpoint with identifier lists seven undefined verbs") {
  AttackReport report = scan_text(read_file(fixture_path("vaults.yaml")));
  const auto& entry = report.entries.at(0);
  const auto& tampering = entry.attacks.at(1);
  REQUIRE(tampering.name == "Endpoint verb tampering");
  REQUIRE(tampering.targeted_parameters.size() == 1);
  CHECK(tampering.targeted_parameters[0].additional_check_rule ==
        "Undefined verbs to probe: put, post, delete, options, head, patch, trace");
}

TEST_CASE("eval_verb_tampering over endpoint records") {
  model::Operation op_storage;
  op_storage.responses.push_back({"200", std::string("OK"), YAML::Node()});
  AnnotatedSpec::EndpointRecord endpoint;
  endpoint.path = "/things/{thingId}";
  endpoint.props.defined_http_verbs = annotation::VerbCoverage::Single;
  AnnotatedSpec::OperationRecord orec;
  orec.verb = model::HttpVerb::Get;
  orec.op = &op_storage;
  AnnotatedSpec::ParamRecord param;
  param.def.name = "thingId";
  param.def.location = model::ParamLocation::Path;
  param.props = id_param(IdType::Numeric);
  orec.params.push_back(param);
  orec.props.identifiers_used = IdentifierCount::Single;
  endpoint.operations.push_back(orec);

  auto findings = eval_verb_tampering(endpoint);
  REQUIRE(findings.size() == 1);
  CHECK(findings[0].techniques == std::vector<std::string>{std::string(kChangeMethod)});

  // With no identifiers nothing in the group applies to a single-verb item.
  endpoint.operations[0].params.clear();
  endpoint.operations[0].props.identifiers_used = IdentifierCount::Zero;
  CHECK(eval_verb_tampering(endpoint).empty());
}

TEST_CASE("verb tampering: all-verbs endpoint never fires method change") {
  std::string doc =
      "openapi: \"3.0.0\"\n"
      "paths:\n"
      "  /docs/{docId}:\n"
      "    parameters:\n"
      "      - {name: docId, in: path, required: true, schema: {type: integer}}\n";
  for (model::HttpVerb verb : model::kAllVerbs) {
    doc += "    " + std::string(model::to_string(verb)) +
           ": {responses: {\"200\": {description: OK}}}\n";
  }
  AttackReport report = scan_text(doc);
  CHECK(fired_techniques(report, "/docs/{docId}").count(std::string(kChangeMethod)) == 0);
}

TEST_CASE("verb tampering: identical parameter sets never fire parameter borrowing") {
  AttackReport report = scan_text(
      "openapi: \"3.0.0\"\n"
      "paths:\n"
      "  /notes:\n"
      "    parameters:\n"
      "      - {name: tag, in: query, schema: {type: string}}\n"
      "    get:\n"
      "      security: [{ApiKey: []}]\n"
      "      responses: {\"200\": {description: OK}}\n"
      "    post:\n"
      "      responses: {\"201\": {description: Created}}\n"
      "components:\n"
      "  securitySchemes:\n"
      "    ApiKey: {type: apiKey, in: header, name: X-Key}\n");
  CHECK(fired_techniques(report, "/notes").count(std::string(kAddingParameters)) == 0);
}

TEST_CASE("build_vector_proposal response bookkeeping") {
  SUBCASE("only a 200 declared") {
    AttackReport report = scan_text(
        "openapi: \"3.0.0\"\n"
        "paths:\n"
        "  /items/{itemId}:\n"
        "    get:\n"
        "      security: [{ApiKey: []}]\n"
        "      parameters:\n"
        "        - {name: itemId, in: path, required: true, schema: {type: integer}}\n"
        "      responses: {\"200\": {description: OK}}\n");
    const auto& entry = report.entries.at(0);
    for (const auto& finding : entry.attacks) {
      CHECK_FALSE(finding.expected_response_declared);
      CHECK(finding.unexpected_response_codes == std::vector<std::string>{"200"});
      for (const auto& target : finding.targeted_parameters) {
        CHECK_FALSE(target.forbidden_response_declared);
      }
    }
    std::string yaml = reporting::emit_report(report, reporting::ReportFormat::Yaml);
    // The key is omitted entirely ("unexpected_response_codes" still appears).
    CHECK(yaml.find("expected_response:") == std::string::npos);
  }
  SUBCASE("declared 200/401/403/404") {
    AttackReport report = scan_text(read_file(fixture_path("vaults.yaml")));
    const auto& finding = report.entries.at(0).attacks.at(2);
    CHECK(finding.unexpected_response_codes == std::vector<std::string>{"200", "401", "404"});
    CHECK(finding.expected_response_declared);
  }
}

TEST_CASE("ten curated specs trigger each technique exactly where intended") {
  struct Fixture {
    std::string_view technique;
    std::string doc;
    std::string path;  // intended firing location
  };
  const std::string key_scheme =
      "components:\n"
      "  securitySchemes:\n"
      "    ApiKey: {type: apiKey, in: header, name: X-Key}\n";
  std::vector<Fixture> fixtures;
  fixtures.push_back({kEnumerationDumb,
                      "openapi: \"3.0.0\"\n"
                      "paths:\n"
                      "  /orders/{orderId}:\n"
                      "    get:\n"
                      "      security: [{ApiKey: []}]\n"
                      "      parameters:\n"
                      "        - {name: orderId, in: path, required: true, schema: {type: integer}}\n"
                      "      responses: {\"200\": {description: OK}, \"403\": {description: Forbidden}}\n" +
                          key_scheme,
                      "/orders/{orderId}"});
  fixtures.push_back({kEnumerationApriori,
                      "openapi: \"3.0.0\"\n"
                      "paths:\n"
                      "  /vaults/{vaultUuid}:\n"
                      "    get:\n"
                      "      security: [{ApiKey: []}]\n"
                      "      parameters:\n"
                      "        - {name: vaultUuid, in: path, required: true, schema: {type: string}}\n"
                      "      responses: {\"200\": {description: OK}}\n" +
                          key_scheme,
                      "/vaults/{vaultUuid}"});
  fixtures.push_back({kFileExtension,
                      "openapi: \"3.0.0\"\n"
                      "paths:\n"
                      "  /files/{fileKey}:\n"
                      "    get:\n"
                      "      security: [{ApiKey: []}]\n"
                      "      parameters:\n"
                      "        - {name: fileKey, in: path, required: true, schema: {type: string}}\n"
                      "      responses: {\"200\": {description: OK}}\n" +
                          key_scheme,
                      "/files/{fileKey}"});
  fixtures.push_back({kWildcard,
                      "openapi: \"3.0.0\"\n"
                      "paths:\n"
                      "  /assets/{assetKey}:\n"
                      "    get:\n"
                      "      security: [{ApiKey: []}]\n"
                      "      parameters:\n"
                      "        - {name: assetKey, in: path, required: true, schema: {type: string}}\n"
                      "      responses: {\"200\": {description: OK}}\n" +
                          key_scheme,
                      "/assets/{assetKey}"});
  fixtures.push_back({kEncoding,
                      "openapi: \"3.0.0\"\n"
                      "paths:\n"
                      "  /blobs/{blobId}:\n"
                      "    get:\n"
                      "      security: [{ApiKey: []}]\n"
                      "      parameters:\n"
                      "        - {name: blobId, in: path, required: true, schema: {type: number}}\n"
                      "      responses: {\"200\": {description: OK}}\n" +
                          key_scheme,
                      "/blobs/{blobId}"});
  fixtures.push_back({kListAppending,
                      "openapi: \"3.0.0\"\n"
                      "paths:\n"
                      "  /bulk:\n"
                      "    post:\n"
                      "      security: [{ApiKey: []}]\n"
                      "      parameters:\n"
                      "        - name: ids\n"
                      "          in: query\n"
                      "          description: Identifiers of the affected rows\n"
                      "          schema: {type: array, items: {type: string}}\n"
                      "      responses: {\"200\": {description: OK}}\n" +
                          key_scheme,
                      "/bulk"});
  fixtures.push_back({kTokenManipulation,
                      "openapi: \"3.0.0\"\n"
                      "paths:\n"
                      "  /profile:\n"
                      "    get:\n"
                      "      security: [{ApiKey: []}]\n"
                      "      responses: {\"200\": {description: OK}}\n" +
                          key_scheme,
                      "/profile"});
  fixtures.push_back({kParameterPollution,
                      "openapi: \"3.0.0\"\n"
                      "paths:\n"
                      "  /users/{userId}:\n"
                      "    put:\n"
                      "      security: [{ApiKey: []}]\n"
                      "      parameters:\n"
                      "        - {name: userId, in: path, required: true, schema: {type: integer}}\n"
                      "      requestBody:\n"
                      "        content:\n"
                      "          application/json:\n"
                      "            schema:\n"
                      "              type: object\n"
                      "              properties:\n"
                      "                userId: {type: integer}\n"
                      "      responses: {\"200\": {description: OK}}\n" +
                          key_scheme,
                      "/users/{userId}"});
  fixtures.push_back({kAddingParameters,
                      "openapi: \"3.0.0\"\n"
                      "paths:\n"
                      "  /exports:\n"
                      "    get:\n"
                      "      security: [{ApiKey: []}]\n"
                      "      parameters:\n"
                      "        - {name: window, in: query, schema: {type: string}}\n"
                      "      responses: {\"200\": {description: OK}}\n"
                      "    post:\n"
                      "      parameters:\n"
                      "        - {name: scope, in: query, schema: {type: string}}\n"
                      "      responses: {\"201\": {description: Created}}\n" +
                          key_scheme,
                      "/exports"});
  fixtures.push_back({kChangeMethod,
                      "openapi: \"3.0.0\"\n"
                      "paths:\n"
                      "  /archives/{archiveId}:\n"
                      "    get:\n"
                      "      parameters:\n"
                      "        - {name: archiveId, in: path, required: true, schema: {type: integer}}\n"
                      "      responses: {\"200\": {description: OK}}\n",
                      "/archives/{archiveId}"});

  for (const auto& fixture : fixtures) {
    CAPTURE(fixture.technique);
    AttackReport report = scan_text(fixture.doc);
    // Fires at the intended endpoint...
    auto at_target = fired_techniques(report, fixture.path);
    CHECK(at_target.count(std::string(fixture.technique)) == 1);
    // ...and nowhere else in that spec.
    for (const auto& entry : report.entries) {
      if (entry.path == fixture.path) continue;
      CHECK(fired_techniques(report, entry.path).count(std::string(fixture.technique)) == 0);
    }
  }
}

TEST_CASE("removing authorization never increases auth-gated findings") {
  // One synthetic endpoint per coverage/id-type combination, evaluated with
  // authorization on and off.
  using OperationRecord = AnnotatedSpec::OperationRecord;
  using EndpointRecord = AnnotatedSpec::EndpointRecord;
  model::Operation op_storage;
  op_storage.responses.push_back({"200", std::string("OK"), YAML::Node()});

  auto count_auth_gated = [](const AttackReport& report) {
    std::size_t n = 0;
    for (const auto& entry : report.entries) {
      for (const auto& finding : entry.attacks) {
        if (finding.group == AttackGroup::Enumeration ||
            finding.group == AttackGroup::AuthorizationTokenManipulation ||
            finding.group == AttackGroup::ParameterPollution) {
          ++n;
        }
      }
    }
    return n;
  };

  for (IdType type : {IdType::Numeric, IdType::Uuid, IdType::String, IdType::Array,
                      IdType::PersonalInfo, IdType::Other}) {
    for (bool multiple : {false, true}) {
      AnnotatedSpec with_auth;
      EndpointRecord endpoint;
      endpoint.path = "/probe";
      OperationRecord orec;
      orec.verb = model::HttpVerb::Get;
      orec.op = &op_storage;
      AnnotatedSpec::ParamRecord param;
      param.def.name = "oid";
      param.def.location = model::ParamLocation::Path;
      param.props = id_param(type);
      orec.params.push_back(param);
      if (multiple) {
        AnnotatedSpec::ParamRecord second = param;
        second.def.location = model::ParamLocation::JsonBody;
        second.props.location = model::ParamLocation::JsonBody;
        orec.params.push_back(second);
      }
      orec.props = auth_method(multiple ? IdentifierCount::Multiple : IdentifierCount::Single);
      endpoint.operations.push_back(orec);
      endpoint.props.defined_http_verbs = annotation::VerbCoverage::Single;
      with_auth.endpoints.push_back(endpoint);

      AnnotatedSpec without_auth = with_auth;
      without_auth.endpoints[0].operations[0].props.authorization_required = false;

      std::size_t with_count = count_auth_gated(evaluate(with_auth));
      std::size_t without_count = count_auth_gated(evaluate(without_auth));
      CHECK(without_count <= with_count);
      CHECK(without_count == 0);
    }
  }
}

TEST_CASE("report arithmetic and evaluation determinism") {
  corpus::CorpusPlan plan;
  plan.seed = 21;
  plan.clean_count = 8;
  for (const auto& pattern : catalog()) plan.plants.push_back({pattern.technique, 2});
  auto spec = test_support::load_shared(corpus::generate(plan).spec_text);
  auto annotated = annotation::annotate(spec);

  AttackReport serial = evaluate_serial(annotated);
  AttackReport parallel = evaluate_parallel(annotated);
  CHECK(test_support::report_fingerprint(serial) == test_support::report_fingerprint(parallel));

  std::size_t sum = 0;
  for (const auto& entry : serial.entries) sum += entry.attacks.size();
  CHECK(sum == serial.total_findings());

  std::string first = reporting::emit_report(serial, reporting::ReportFormat::Yaml);
  std::string second = reporting::emit_report(evaluate(annotated), reporting::ReportFormat::Yaml);
  CHECK(first == second);
}
