#include "idorscan/reporting.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <nlohmann/json.hpp>

#include "idorscan/doc_convert.hpp"
#include "idorscan/errors.hpp"

namespace idorscan::reporting {

namespace {

using annotation::AnnotatedSpec;
using nlohmann::ordered_json;
using rules::AttackReport;
using rules::PotentialVulnerability;
using rules::TargetedParameter;

YAML::Node bool_node(bool value) {
  YAML::Node node;
  node = value;
  return node;
}

YAML::Node parameter_props_node(const annotation::ParameterProperties& props) {
  YAML::Node node(YAML::NodeType::Map);
  node["is_identifier"] = bool_node(props.is_identifier);
  node["location"] = std::string(model::to_string(props.location));
  node["type"] = std::string(annotation::to_string(props.id_type));
  return node;
}

YAML::Node method_props_node(const annotation::MethodProperties& props) {
  YAML::Node node(YAML::NodeType::Map);
  node["operation_only_parameters_specified"] = bool_node(props.operation_only_parameters_specified);
  node["parameters_required"] = bool_node(props.parameters_required);
  node["has_body"] = bool_node(props.has_body);
  node["identifiers_used"] = std::string(annotation::to_string(props.identifiers_used));
  node["authorization_required"] = bool_node(props.authorization_required);
  return node;
}

/// Follows a $ref chain inside an already-cloned document. The loader
/// validated every reference, so failures cannot occur here.
YAML::Node resolve_in(const YAML::Node& root, YAML::Node node) {
  while (node && node.IsMap() && node["$ref"] && node["$ref"].IsScalar()) {
    const std::string pointer = node["$ref"].Scalar();
    if (pointer.rfind("#/", 0) != 0) break;
    YAML::Node current = root;
    std::size_t pos = 2;
    while (pos <= pointer.size()) {
      std::size_t next = pointer.find('/', pos);
      // reset() rebinds the handle; operator= would rewrite the tree.
      YAML::Node child = current[pointer.substr(pos, next == std::string::npos ? next : next - pos)];
      if (!child) return node;
      current.reset(child);
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    node.reset(current);
  }
  return node;
}

const annotation::ParameterProperties* find_declared_param_props(
    const AnnotatedSpec::EndpointRecord& endpoint, const std::string& name,
    const std::string& location) {
  for (const auto& orec : endpoint.operations) {
    for (const auto& param : orec.params) {
      if (param.def.name == name && model::to_string(param.def.location) == location) {
        return &param.props;
      }
    }
  }
  return nullptr;
}

void annotate_parameter_nodes(const YAML::Node& root, const YAML::Node& params_node,
                              const AnnotatedSpec::EndpointRecord& endpoint) {
  if (!params_node || !params_node.IsSequence()) return;
  for (auto param_node : params_node) {
    YAML::Node resolved = resolve_in(root, param_node);
    if (!resolved.IsMap() || !resolved["name"] || !resolved["in"]) continue;
    const auto* props = find_declared_param_props(endpoint, resolved["name"].Scalar(),
                                                  resolved["in"].Scalar());
    if (props) resolved["parameter_level_properties"] = parameter_props_node(*props);
  }
}

ordered_json targeted_parameters_json(const PotentialVulnerability& finding) {
  ordered_json params = ordered_json::object();
  for (const TargetedParameter& target : finding.targeted_parameters) {
    ordered_json entry = ordered_json::object();
    entry["attacks"] = target.attacks;
    entry["403_response_code_specified"] = target.forbidden_response_declared;
    ordered_json props = ordered_json::object();
    props["is_identifier"] = target.props.is_identifier;
    props["location"] = std::string(model::to_string(target.props.location));
    props["type"] = std::string(annotation::to_string(target.props.id_type));
    entry["parameter_level_properties"] = props;
    if (target.additional_check_rule) {
      entry["additional_check_rule"] = *target.additional_check_rule;
    }
    params[target.display_name] = entry;
  }
  return params;
}

YAML::Node expected_response_node(const AttackReport& report,
                                  const PotentialVulnerability& finding) {
  if (!report.spec) return YAML::Node(YAML::NodeType::Undefined);
  const model::PathItem* item = report.spec->find_path(finding.path);
  if (!item) return YAML::Node(YAML::NodeType::Undefined);
  const model::Operation* op = item->find_operation(finding.verb);
  if (!op) return YAML::Node(YAML::NodeType::Undefined);
  const model::ResponseDef* response = op->find_response("403");
  if (!response) return YAML::Node(YAML::NodeType::Undefined);
  return response->raw;
}

void emit_targeted_parameters(YAML::Emitter& out, const PotentialVulnerability& finding) {
  out << YAML::BeginMap;
  for (const TargetedParameter& target : finding.targeted_parameters) {
    out << YAML::Key << target.display_name << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "attacks" << YAML::Value << YAML::BeginSeq;
    for (const auto& technique : target.attacks) out << technique;
    out << YAML::EndSeq;
    out << YAML::Key << "403_response_code_specified" << YAML::Value
        << target.forbidden_response_declared;
    out << YAML::Key << "parameter_level_properties" << YAML::Value;
    emit_yaml_node(out, parameter_props_node(target.props));
    if (target.additional_check_rule) {
      out << YAML::Key << "additional_check_rule" << YAML::Value << *target.additional_check_rule;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
}

std::string emit_report_yaml(const AttackReport& report) {
  YAML::Emitter out;
  out.SetIndent(2);
  out << YAML::BeginMap;
  for (const auto& entry : report.entries) {
    out << YAML::Key << entry.path << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "count" << YAML::Value << entry.attacks.size();
    out << YAML::Key << "attacks" << YAML::Value << YAML::BeginSeq;
    for (const PotentialVulnerability& finding : entry.attacks) {
      out << YAML::BeginMap;
      out << YAML::Key << "name" << YAML::Value << finding.name;
      out << YAML::Key << "check_rule" << YAML::Value << finding.check_rule;
      out << YAML::Key << "description" << YAML::Value << finding.description;
      out << YAML::Key << "targeted_operation" << YAML::Value << finding.targeted_operation;
      out << YAML::Key << "targeted_parameters" << YAML::Value;
      emit_targeted_parameters(out, finding);
      if (finding.expected_response_declared) {
        YAML::Node response = expected_response_node(report, finding);
        if (response && response.IsDefined()) {
          out << YAML::Key << "expected_response" << YAML::Value;
          emit_yaml_node(out, response);
        }
      }
      out << YAML::Key << "unexpected_response_codes" << YAML::Value << YAML::BeginSeq;
      for (const auto& code : finding.unexpected_response_codes) {
        out << YAML::SingleQuoted << code;
      }
      out << YAML::EndSeq;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  if (!out.good()) {
    throw ScanError(ErrorCode::SerializationFailure,
                    std::string("YAML emission failed: ") + out.GetLastError());
  }
  return std::string(out.c_str()) + "\n";
}

std::string emit_report_json(const AttackReport& report) {
  ordered_json doc = ordered_json::object();
  for (const auto& entry : report.entries) {
    ordered_json path_entry = ordered_json::object();
    path_entry["count"] = entry.attacks.size();
    ordered_json attacks = ordered_json::array();
    for (const PotentialVulnerability& finding : entry.attacks) {
      ordered_json attack = ordered_json::object();
      attack["name"] = finding.name;
      attack["check_rule"] = finding.check_rule;
      attack["description"] = finding.description;
      attack["targeted_operation"] = finding.targeted_operation;
      attack["targeted_parameters"] = targeted_parameters_json(finding);
      if (finding.expected_response_declared) {
        YAML::Node response = expected_response_node(report, finding);
        if (response && response.IsDefined()) {
          attack["expected_response"] = yaml_to_json(response);
        }
      }
      attack["unexpected_response_codes"] = finding.unexpected_response_codes;
      attacks.push_back(std::move(attack));
    }
    path_entry["attacks"] = std::move(attacks);
    doc[entry.path] = std::move(path_entry);
  }
  return doc.dump(2) + "\n";
}

double ratio_percent(std::size_t part, std::size_t total) {
  if (total == 0) return 100.0;
  return 100.0 * static_cast<double>(part) / static_cast<double>(total);
}

}  // namespace

std::string emit_annotated(const annotation::AnnotatedSpec& annotated) {
  if (!annotated.spec) {
    throw ScanError(ErrorCode::SerializationFailure, "annotated spec has no source document");
  }
  YAML::Node doc = YAML::Clone(annotated.spec->raw_doc);
  if (annotated.endpoints.empty()) {
    return "# idorscan: specification has no endpoints; document unchanged\n" +
           emit_yaml(doc);
  }
  YAML::Node paths = doc["paths"];
  for (const auto& endpoint : annotated.endpoints) {
    YAML::Node item = resolve_in(doc, paths[endpoint.path]);
    if (!item || !item.IsMap()) continue;
    annotate_parameter_nodes(doc, item["parameters"], endpoint);
    for (const auto& orec : endpoint.operations) {
      YAML::Node op_node = resolve_in(doc, item[std::string(model::to_string(orec.verb))]);
      if (!op_node || !op_node.IsMap()) continue;
      annotate_parameter_nodes(doc, op_node["parameters"], endpoint);
      op_node["method_level_properties"] = method_props_node(orec.props);
    }
    YAML::Node endpoint_props(YAML::NodeType::Map);
    endpoint_props["defined_http_verbs"] =
        std::string(annotation::to_string(endpoint.props.defined_http_verbs));
    item["endpoint_level_properties"] = endpoint_props;
  }
  return emit_yaml(doc);
}

std::string emit_report(const rules::AttackReport& report, ReportFormat format) {
  return format == ReportFormat::Yaml ? emit_report_yaml(report) : emit_report_json(report);
}

TruthLabels load_truth(const std::string& document_text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(document_text);
  } catch (const YAML::Exception& e) {
    throw ScanError(ErrorCode::MalformedDocument,
                    std::string("truth sidecar parse error: ") + e.what());
  }
  TruthLabels labels;
  if (doc.IsNull() || !doc.IsDefined()) return labels;
  if (!doc.IsMap()) {
    throw ScanError(ErrorCode::MalformedDocument, "truth sidecar root is not a mapping");
  }
  for (const auto& kv : doc) {
    TruthLabels::EndpointTruth truth;
    if (kv.second.IsMap()) {
      if (YAML::Node ids = kv.second["identifiers"]; ids && ids.IsSequence()) {
        for (const auto& id : ids) truth.identifiers.insert(id.Scalar());
      }
      if (YAML::Node techniques = kv.second["expected_techniques"];
          techniques && techniques.IsSequence()) {
        for (const auto& t : techniques) truth.expected_techniques.insert(t.Scalar());
      }
    }
    labels.endpoints[kv.first.Scalar()] = std::move(truth);
  }
  return labels;
}

ScanMetrics compute_metrics(const annotation::AnnotatedSpec& annotated,
                            const rules::AttackReport& report,
                            const std::optional<TruthLabels>& truth) {
  ScanMetrics metrics;
  metrics.endpoints_total = annotated.endpoints.size();
  metrics.endpoints_processed = annotated.endpoints.size();
  metrics.endpoint_processing_ratio_percent =
      ratio_percent(metrics.endpoints_processed, metrics.endpoints_total);
  metrics.methods_total = annotated.operation_count();
  metrics.methods_processed = metrics.methods_total;
  metrics.method_processing_ratio_percent =
      ratio_percent(metrics.methods_processed, metrics.methods_total);

  // Identifiers are counted once per (path, name, location): a shared
  // endpoint-level parameter is a single identifier in the specification.
  std::set<std::tuple<std::string, std::string, model::ParamLocation>> identifiers;
  std::map<std::string, std::set<std::string>> recognized_names;
  for (const auto& endpoint : annotated.endpoints) {
    recognized_names[endpoint.path];
    for (const auto& orec : endpoint.operations) {
      for (const auto& param : orec.params) {
        if (!param.props.is_identifier) continue;
        identifiers.insert({endpoint.path, param.def.name, param.def.location});
        recognized_names[endpoint.path].insert(param.def.name);
      }
    }
  }
  metrics.identifiers_recognized = identifiers.size();

  metrics.findings_total = report.total_findings();
  metrics.endpoints_with_findings = report.entries.size();
  metrics.endpoints_without_findings =
      metrics.endpoints_processed - metrics.endpoints_with_findings;
  for (const auto& entry : report.entries) {
    for (const auto& finding : entry.attacks) {
      for (const auto& technique : finding.techniques) {
        metrics.per_technique_counts[technique]++;
      }
    }
  }

  if (!truth) return metrics;

  ScanMetrics::TruthStats stats;
  for (const auto& [path, endpoint_truth] : truth->endpoints) {
    if (!annotated.find_endpoint(path)) {
      throw ScanError(ErrorCode::LabelMismatch,
                      "truth sidecar references unknown endpoint '" + path + "'");
    }
    stats.identifiers_in_specification += endpoint_truth.identifiers.size();
  }
  for (const auto& [path, names] : recognized_names) {
    auto it = truth->endpoints.find(path);
    const std::set<std::string> empty;
    const std::set<std::string>& labeled = it == truth->endpoints.end() ? empty : it->second.identifiers;
    for (const auto& name : names) {
      if (labeled.count(name)) {
        stats.true_identifiers_recognized++;
      } else {
        stats.false_identifiers_recognized++;
      }
    }
  }
  stats.identifier_true_positive_percent =
      ratio_percent(stats.true_identifiers_recognized, stats.identifiers_in_specification);
  stats.identifier_false_positive_percent =
      stats.identifiers_in_specification == 0
          ? (stats.false_identifiers_recognized == 0 ? 0.0 : 100.0)
          : 100.0 * static_cast<double>(stats.false_identifiers_recognized) /
                static_cast<double>(stats.identifiers_in_specification);

  stats.generated_tests = metrics.findings_total;
  for (const auto& entry : report.entries) {
    auto it = truth->endpoints.find(entry.path);
    if (it == truth->endpoints.end()) continue;
    for (const auto& finding : entry.attacks) {
      bool relevant = std::any_of(finding.techniques.begin(), finding.techniques.end(),
                                  [&](const std::string& t) {
                                    return it->second.expected_techniques.count(t) > 0;
                                  });
      if (relevant) stats.relevant_tests++;
    }
  }
  stats.test_true_positive_percent = ratio_percent(stats.relevant_tests, stats.generated_tests);

  stats.endpoints_with_tests = metrics.endpoints_with_findings;
  stats.endpoints_without_tests = metrics.endpoints_without_findings;
  for (const auto& endpoint : annotated.endpoints) {
    auto it = truth->endpoints.find(endpoint.path);
    if (it == truth->endpoints.end() || it->second.expected_techniques.empty()) continue;
    bool flagged = std::any_of(report.entries.begin(), report.entries.end(),
                               [&](const auto& entry) { return entry.path == endpoint.path; });
    if (!flagged) stats.missed_vulnerable_endpoints++;
  }
  stats.false_negative_percent =
      stats.endpoints_without_tests == 0
          ? 0.0
          : 100.0 * static_cast<double>(stats.missed_vulnerable_endpoints) /
                static_cast<double>(stats.endpoints_without_tests);
  metrics.truth = stats;
  return metrics;
}

std::string emit_metrics(const ScanMetrics& metrics) {
  ordered_json doc = ordered_json::object();
  doc["endpoints_total"] = metrics.endpoints_total;
  doc["endpoints_processed"] = metrics.endpoints_processed;
  doc["endpoint_processing_ratio_percent"] = metrics.endpoint_processing_ratio_percent;
  doc["methods_total"] = metrics.methods_total;
  doc["methods_processed"] = metrics.methods_processed;
  doc["method_processing_ratio_percent"] = metrics.method_processing_ratio_percent;
  doc["identifiers_recognized"] = metrics.identifiers_recognized;
  doc["findings_total"] = metrics.findings_total;
  doc["endpoints_with_findings"] = metrics.endpoints_with_findings;
  doc["endpoints_without_findings"] = metrics.endpoints_without_findings;
  ordered_json techniques = ordered_json::object();
  for (const auto& [technique, count] : metrics.per_technique_counts) {
    techniques[technique] = count;
  }
  doc["per_technique_counts"] = std::move(techniques);
  if (metrics.truth) {
    const auto& stats = *metrics.truth;
    ordered_json truth = ordered_json::object();
    truth["identifiers_in_specification"] = stats.identifiers_in_specification;
    truth["true_identifiers_recognized"] = stats.true_identifiers_recognized;
    truth["false_identifiers_recognized"] = stats.false_identifiers_recognized;
    truth["identifier_true_positive_percent"] = stats.identifier_true_positive_percent;
    truth["identifier_false_positive_percent"] = stats.identifier_false_positive_percent;
    truth["generated_tests"] = stats.generated_tests;
    truth["relevant_tests"] = stats.relevant_tests;
    truth["test_true_positive_percent"] = stats.test_true_positive_percent;
    truth["endpoints_with_tests"] = stats.endpoints_with_tests;
    truth["endpoints_without_tests"] = stats.endpoints_without_tests;
    truth["missed_vulnerable_endpoints"] = stats.missed_vulnerable_endpoints;
    truth["false_negative_percent"] = stats.false_negative_percent;
    doc["truth"] = std::move(truth);
  }
  return doc.dump(2) + "\n";
}

}  // namespace idorscan::reporting
