#include "idorscan/attack_rules.hpp"

#include <algorithm>
#include <map>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace idorscan::rules {

namespace {

using annotation::AnnotatedSpec;
using annotation::IdentifierCount;
using annotation::IdType;
using annotation::MethodProperties;
using annotation::VerbCoverage;

constexpr std::string_view kEnumerationCheckRule =
    "Operation uses parameters AND operation has identifiers";
constexpr std::string_view kTokenCheckRule = "Operation uses authorization";
constexpr std::string_view kPollutionCheckRule =
    "Two parameters with same name but different locations AND operation uses authorization "
    "AND operation has multiple identifiers";
constexpr std::string_view kAddingCheckRule =
    "Endpoint defines multiple HTTP methods AND operations' parameter sets differ AND at "
    "least one operation uses authorization";
constexpr std::string_view kChangeMethodCheckRule =
    "Not all HTTP verbs are defined AND operation has identifiers";

std::vector<AttackPattern> make_catalog() {
  return {
      {AttackGroup::Enumeration, std::string(kEnumerationDumb),
       "Identifier is tampered for enumeration based on automatically or semi-automatically "
       "determined pattern. In the simplest form, identifier is sequential and enumeration "
       "leads to targeting existing object with identifier being unknown at the start",
       PatternArity::PerParameter},
      {AttackGroup::Enumeration, std::string(kEnumerationApriori),
       "Targeted identifier structured in a way that it's hard to automatically enumerate it "
       "but still needed to check with a set of known identifiers of non-owned objects. In "
       "combination with information disclosure vulnerability, impact of BOLA increases "
       "because an attacker would exploit vulnerability without brute-forcing techniques",
       PatternArity::PerParameter},
      {AttackGroup::Enumeration, std::string(kFileExtension),
       "A variation of enumeration when enumerated identifier is appended with an extension "
       "or changed to another extension",
       PatternArity::PerParameter},
      {AttackGroup::Enumeration, std::string(kWildcard),
       "A variation of enumeration when enumerated identifier is decorated with a wildcard "
       "or a special character",
       PatternArity::PerParameter},
      {AttackGroup::Enumeration, std::string(kEncoding),
       "A variation of enumeration when not only an encoded identifier is enumerated but a "
       "decoded identifier is substituted too",
       PatternArity::PerParameter},
      {AttackGroup::Enumeration, std::string(kListAppending),
       "Parameter's type is array/list with one or few values and identifiers of non-owned "
       "objects are appended to that list to exploit improper access control",
       PatternArity::PerParameter},
      {AttackGroup::AuthorizationTokenManipulation, std::string(kTokenManipulation),
       "Request is repeated with authorization cookies of another user to check whether "
       "authorization is incorrect",
       PatternArity::PerOperation},
      {AttackGroup::ParameterPollution, std::string(kParameterPollution),
       "Information in one request is processed and sent into different processing units of "
       "server. Tampering with one of parameter's value is a way to check that authorization "
       "is consistent and there's no case that value from one location is used for "
       "authorization and value from another is used to access an object",
       PatternArity::ParameterPair},
      {AttackGroup::EndpointVerbTampering, std::string(kAddingParameters),
       "Authorization may be performed for a concrete verb and its parameters but service "
       "logic ignores requests verb",
       PatternArity::OperationPair},
      {AttackGroup::EndpointVerbTampering, std::string(kChangeMethod),
       "Request's verb is changed to another verb that is not specified in the endpoint's "
       "description. Incorrect behavior is when authorization checks are performed over "
       "described verbs and verb transformation is performed after authorization check "
       "(PUT->POST)",
       PatternArity::PerOperation},
  };
}

bool tamperable_location(model::ParamLocation location) {
  switch (location) {
    case model::ParamLocation::Path:
    case model::ParamLocation::Query:
    case model::ParamLocation::Body:
    case model::ParamLocation::JsonBody:
      return true;
    case model::ParamLocation::Header:
    case model::ParamLocation::Cookie:
      return false;
  }
  return false;
}

/// Sorts a technique list into catalog order and drops duplicates.
std::vector<std::string> in_catalog_order(const std::set<std::string>& techniques) {
  std::vector<std::string> out;
  for (const auto& pattern : catalog()) {
    if (techniques.count(pattern.technique)) out.push_back(pattern.technique);
  }
  return out;
}

void fill_response_fields(PotentialVulnerability& finding,
                          const AnnotatedSpec::OperationRecord& orec) {
  for (const auto& response : orec.op->responses) {
    if (response.status_code == "403") {
      finding.expected_response_declared = true;
    } else {
      finding.unexpected_response_codes.push_back(response.status_code);
    }
  }
}

/// Suffix duplicate parameter names with their location so the
/// targeted_parameters mapping keeps unique keys.
void disambiguate_display_names(std::vector<TargetedParameter>& params) {
  std::map<std::string, int> counts;
  for (const auto& p : params) counts[p.name]++;
  for (auto& p : params) {
    p.display_name = counts[p.name] > 1
                         ? p.name + " (" + std::string(model::to_string(p.location)) + ")"
                         : p.name;
  }
}

PotentialVulnerability base_finding(const AnnotatedSpec::EndpointRecord& endpoint,
                                    const AnnotatedSpec::OperationRecord& orec,
                                    AttackGroup group, std::string_view check_rule,
                                    std::string description) {
  PotentialVulnerability finding;
  finding.path = endpoint.path;
  finding.group = group;
  finding.name = std::string(group_display_name(group));
  finding.check_rule = std::string(check_rule);
  finding.description = std::move(description);
  finding.verb = orec.verb;
  finding.targeted_operation = std::string(model::to_string(orec.verb));
  fill_response_fields(finding, orec);
  return finding;
}

const std::string& technique_description(std::string_view technique) {
  return find_pattern(technique)->description;
}

std::optional<PotentialVulnerability> make_enumeration_finding(
    const AnnotatedSpec::EndpointRecord& endpoint, const AnnotatedSpec::OperationRecord& orec,
    bool paper_exact) {
  const MethodProperties& mp = orec.props;
  if (!mp.authorization_required || orec.params.empty() ||
      mp.identifiers_used == IdentifierCount::Zero) {
    return std::nullopt;
  }
  // The finding keeps the group's lead description regardless of which
  // variants fire; the per-parameter attack lists carry the variants.
  PotentialVulnerability finding =
      base_finding(endpoint, orec, AttackGroup::Enumeration, kEnumerationCheckRule,
                   technique_description(kEnumerationDumb));
  std::set<std::string> all_techniques;
  for (const auto& param : orec.params) {
    if (!param.props.is_identifier) continue;
    auto techniques = enumeration_techniques(param.props.id_type, paper_exact);
    if (techniques.empty()) continue;
    TargetedParameter target;
    target.name = param.def.name;
    target.location = param.def.location;
    target.attacks = techniques;
    target.forbidden_response_declared = finding.expected_response_declared;
    target.props = param.props;
    target.additional_check_rule =
        "Identifier's type is " + std::string(annotation::to_string(param.props.id_type));
    finding.targeted_parameters.push_back(std::move(target));
    all_techniques.insert(techniques.begin(), techniques.end());
  }
  if (finding.targeted_parameters.empty()) return std::nullopt;
  disambiguate_display_names(finding.targeted_parameters);
  finding.techniques = in_catalog_order(all_techniques);
  return finding;
}

PotentialVulnerability make_token_finding(const AnnotatedSpec::EndpointRecord& endpoint,
                                          const AnnotatedSpec::OperationRecord& orec) {
  PotentialVulnerability finding =
      base_finding(endpoint, orec, AttackGroup::AuthorizationTokenManipulation, kTokenCheckRule,
                   technique_description(kTokenManipulation));
  finding.techniques = {std::string(kTokenManipulation)};
  return finding;
}

std::optional<PotentialVulnerability> make_pollution_finding(
    const AnnotatedSpec::EndpointRecord& endpoint, const AnnotatedSpec::OperationRecord& orec) {
  auto pairs = eval_parameter_pollution(orec.props, orec.params);
  if (pairs.empty()) return std::nullopt;
  PotentialVulnerability finding =
      base_finding(endpoint, orec, AttackGroup::ParameterPollution, kPollutionCheckRule,
                   technique_description(kParameterPollution));
  finding.techniques = {std::string(kParameterPollution)};
  // One entry per polluted name, listing every location it appears in.
  std::map<std::string, std::set<model::ParamLocation>> by_name;
  std::map<std::string, std::size_t> representative;
  for (const auto& [a, b] : pairs) {
    const auto& pa = orec.params[a];
    const auto& pb = orec.params[b];
    by_name[pa.def.name].insert(pa.def.location);
    by_name[pa.def.name].insert(pb.def.location);
    if (!representative.count(pa.def.name)) {
      representative[pa.def.name] = pa.props.is_identifier ? a : b;
    }
  }
  for (const auto& [name, locations] : by_name) {
    const auto& param = orec.params[representative[name]];
    TargetedParameter target;
    target.name = name;
    target.location = param.def.location;
    target.attacks = {std::string(kParameterPollution)};
    target.forbidden_response_declared = finding.expected_response_declared;
    target.props = param.props;
    std::string location_list;
    for (auto location : locations) {
      if (!location_list.empty()) location_list += ", ";
      location_list += std::string(model::to_string(location));
    }
    target.additional_check_rule = "Same parameter name declared in locations: " + location_list;
    finding.targeted_parameters.push_back(std::move(target));
  }
  disambiguate_display_names(finding.targeted_parameters);
  return finding;
}

std::set<std::pair<std::string, model::ParamLocation>> parameter_set(
    const AnnotatedSpec::OperationRecord& orec) {
  std::set<std::pair<std::string, model::ParamLocation>> out;
  for (const auto& p : orec.params) out.emplace(p.def.name, p.def.location);
  return out;
}

std::optional<PotentialVulnerability> make_adding_parameters_finding(
    const AnnotatedSpec::EndpointRecord& endpoint, const AnnotatedSpec::OperationRecord& target,
    const AnnotatedSpec::OperationRecord& donor) {
  auto target_set = parameter_set(target);
  auto donor_set = parameter_set(donor);
  if (target_set.empty() || donor_set.empty() || target_set == donor_set) return std::nullopt;
  PotentialVulnerability finding =
      base_finding(endpoint, target, AttackGroup::EndpointVerbTampering, kAddingCheckRule,
                   technique_description(kAddingParameters));
  finding.paired_verb = donor.verb;
  finding.targeted_operation = std::string(model::to_string(target.verb)) + "+" +
                               std::string(model::to_string(donor.verb));
  finding.techniques = {std::string(kAddingParameters)};
  for (const auto& param : donor.params) {
    if (target_set.count({param.def.name, param.def.location})) continue;
    TargetedParameter t;
    t.name = param.def.name;
    t.location = param.def.location;
    t.attacks = {std::string(kAddingParameters)};
    t.forbidden_response_declared = finding.expected_response_declared;
    t.props = param.props;
    t.additional_check_rule = "Parameter is defined for " +
                              std::string(model::to_string(donor.verb)) + " but not for " +
                              std::string(model::to_string(target.verb));
    finding.targeted_parameters.push_back(std::move(t));
  }
  disambiguate_display_names(finding.targeted_parameters);
  return finding;
}

PotentialVulnerability make_change_method_finding(const AnnotatedSpec::EndpointRecord& endpoint,
                                                  const AnnotatedSpec::OperationRecord& orec) {
  PotentialVulnerability finding =
      base_finding(endpoint, orec, AttackGroup::EndpointVerbTampering, kChangeMethodCheckRule,
                   technique_description(kChangeMethod));
  finding.techniques = {std::string(kChangeMethod)};
  std::string undefined_verbs;
  for (model::HttpVerb verb : model::kAllVerbs) {
    bool defined = std::any_of(endpoint.operations.begin(), endpoint.operations.end(),
                               [verb](const auto& op) { return op.verb == verb; });
    if (defined) continue;
    if (!undefined_verbs.empty()) undefined_verbs += ", ";
    undefined_verbs += std::string(model::to_string(verb));
  }
  for (const auto& param : orec.params) {
    if (!param.props.is_identifier) continue;
    TargetedParameter target;
    target.name = param.def.name;
    target.location = param.def.location;
    target.attacks = {std::string(kChangeMethod)};
    target.forbidden_response_declared = finding.expected_response_declared;
    target.props = param.props;
    target.additional_check_rule = "Undefined verbs to probe: " + undefined_verbs;
    finding.targeted_parameters.push_back(std::move(target));
  }
  disambiguate_display_names(finding.targeted_parameters);
  return finding;
}

/// All findings for one endpoint. Per operation the emission order is
/// token manipulation, verb tampering (parameter borrowing, then method
/// change), parameter pollution, enumeration.
PathFindings evaluate_endpoint(const AnnotatedSpec::EndpointRecord& endpoint,
                               const EvaluateOptions& options) {
  PathFindings entry;
  entry.path = endpoint.path;
  bool any_operation_authorized =
      std::any_of(endpoint.operations.begin(), endpoint.operations.end(),
                  [](const auto& op) { return op.props.authorization_required; });
  for (const auto& orec : endpoint.operations) {
    if (eval_token_manipulation(orec.props)) {
      entry.attacks.push_back(make_token_finding(endpoint, orec));
    }
    if (endpoint.props.defined_http_verbs != VerbCoverage::Single && any_operation_authorized) {
      for (const auto& donor : endpoint.operations) {
        if (&donor == &orec) continue;
        if (auto finding = make_adding_parameters_finding(endpoint, orec, donor)) {
          entry.attacks.push_back(std::move(*finding));
        }
      }
    }
    if (endpoint.props.defined_http_verbs != VerbCoverage::All &&
        orec.props.identifiers_used != IdentifierCount::Zero) {
      entry.attacks.push_back(make_change_method_finding(endpoint, orec));
    }
    if (auto finding = make_pollution_finding(endpoint, orec)) {
      entry.attacks.push_back(std::move(*finding));
    }
    if (auto finding = make_enumeration_finding(endpoint, orec, options.paper_exact)) {
      entry.attacks.push_back(std::move(*finding));
    }
  }
  return entry;
}

AttackReport evaluate_impl(const AnnotatedSpec& annotated, const EvaluateOptions& options,
                           bool parallel) {
  std::vector<PathFindings> slots(annotated.endpoints.size());
  const auto n = static_cast<std::ptrdiff_t>(annotated.endpoints.size());
  if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      slots[static_cast<std::size_t>(i)] =
          evaluate_endpoint(annotated.endpoints[static_cast<std::size_t>(i)], options);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      slots[static_cast<std::size_t>(i)] =
          evaluate_endpoint(annotated.endpoints[static_cast<std::size_t>(i)], options);
    }
  }
  AttackReport report;
  report.spec = annotated.spec;
  for (auto& slot : slots) {
    if (!slot.attacks.empty()) report.entries.push_back(std::move(slot));
  }
  return report;
}

}  // namespace

std::string_view group_display_name(AttackGroup group) {
  switch (group) {
    case AttackGroup::Enumeration: return "Enumeration";
    case AttackGroup::AuthorizationTokenManipulation: return "Authorization token manipulation";
    case AttackGroup::ParameterPollution: return "Parameter pollution";
    case AttackGroup::EndpointVerbTampering: return "Endpoint verb tampering";
  }
  return "Enumeration";
}

const std::vector<AttackPattern>& catalog() {
  static const std::vector<AttackPattern> patterns = make_catalog();
  return patterns;
}

const AttackPattern* find_pattern(std::string_view technique) {
  for (const auto& pattern : catalog()) {
    if (pattern.technique == technique) return &pattern;
  }
  return nullptr;
}

std::size_t AttackReport::total_findings() const {
  std::size_t n = 0;
  for (const auto& entry : entries) n += entry.attacks.size();
  return n;
}

std::vector<std::string> enumeration_techniques(annotation::IdType type, bool paper_exact) {
  std::set<std::string> out;
  switch (type) {
    case IdType::Numeric:
      out.insert(std::string(kEnumerationDumb));
      break;
    case IdType::Uuid:
    case IdType::PersonalInfo:
      out.insert(std::string(kEnumerationApriori));
      break;
    case IdType::String:
      out.insert(std::string(kEnumerationApriori));
      out.insert(std::string(kFileExtension));
      out.insert(std::string(kWildcard));
      out.insert(std::string(kEncoding));
      break;
    case IdType::Array:
      out.insert(std::string(kListAppending));
      break;
    case IdType::Other:
      out.insert(std::string(kEncoding));
      break;
    case IdType::None:
      return {};
  }
  if (paper_exact) {
    // The {string, other} gate on these two variants is this tool's
    // extension; exact mode removes it.
    out.insert(std::string(kFileExtension));
    out.insert(std::string(kEncoding));
  }
  return in_catalog_order(out);
}

bool eval_token_manipulation(const annotation::MethodProperties& mp) {
  return mp.authorization_required;
}

std::vector<std::string> eval_enumeration(const annotation::MethodProperties& mp,
                                          const annotation::ParameterProperties& pp,
                                          bool paper_exact) {
  if (!mp.authorization_required || mp.identifiers_used == IdentifierCount::Zero ||
      !pp.is_identifier) {
    return {};
  }
  return enumeration_techniques(pp.id_type, paper_exact);
}

std::vector<std::pair<std::size_t, std::size_t>> eval_parameter_pollution(
    const annotation::MethodProperties& mp,
    const std::vector<annotation::AnnotatedSpec::ParamRecord>& params) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (!mp.authorization_required || mp.identifiers_used != IdentifierCount::Multiple) {
    return pairs;
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = i + 1; j < params.size(); ++j) {
      const auto& a = params[i];
      const auto& b = params[j];
      if (a.def.name != b.def.name || a.def.location == b.def.location) continue;
      if (!tamperable_location(a.def.location) || !tamperable_location(b.def.location)) continue;
      if (!a.props.is_identifier && !b.props.is_identifier) continue;
      pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

std::vector<PotentialVulnerability> eval_verb_tampering(
    const annotation::AnnotatedSpec::EndpointRecord& endpoint) {
  std::vector<PotentialVulnerability> findings;
  bool any_operation_authorized =
      std::any_of(endpoint.operations.begin(), endpoint.operations.end(),
                  [](const auto& op) { return op.props.authorization_required; });
  for (const auto& orec : endpoint.operations) {
    if (endpoint.props.defined_http_verbs != VerbCoverage::Single && any_operation_authorized) {
      for (const auto& donor : endpoint.operations) {
        if (&donor == &orec) continue;
        if (auto finding = make_adding_parameters_finding(endpoint, orec, donor)) {
          findings.push_back(std::move(*finding));
        }
      }
    }
    if (endpoint.props.defined_http_verbs != VerbCoverage::All &&
        orec.props.identifiers_used != IdentifierCount::Zero) {
      findings.push_back(make_change_method_finding(endpoint, orec));
    }
  }
  return findings;
}

AttackReport evaluate(const annotation::AnnotatedSpec& annotated, const EvaluateOptions& options) {
#ifdef _OPENMP
  return evaluate_parallel(annotated, options);
#else
  return evaluate_serial(annotated, options);
#endif
}

AttackReport evaluate_serial(const annotation::AnnotatedSpec& annotated,
                             const EvaluateOptions& options) {
  return evaluate_impl(annotated, options, false);
}

AttackReport evaluate_parallel(const annotation::AnnotatedSpec& annotated,
                               const EvaluateOptions& options) {
  return evaluate_impl(annotated, options, true);
}

}  // namespace idorscan::rules
