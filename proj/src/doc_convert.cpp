#include "idorscan/doc_convert.hpp"

#include <cerrno>
#include <cstdlib>
#include <string>

#include "idorscan/errors.hpp"

namespace idorscan {

namespace {

bool looks_like_integer(const std::string& s, long long& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) return false;
  out = v;
  return true;
}

bool looks_like_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size()) return false;
  out = v;
  return true;
}

}  // namespace

YAML::Node json_to_yaml(const nlohmann::ordered_json& value) {
  switch (value.type()) {
    case nlohmann::ordered_json::value_t::null:
      return YAML::Node(YAML::NodeType::Null);
    case nlohmann::ordered_json::value_t::boolean:
      return YAML::Node(value.get<bool>());
    case nlohmann::ordered_json::value_t::number_integer:
      return YAML::Node(value.get<long long>());
    case nlohmann::ordered_json::value_t::number_unsigned:
      return YAML::Node(value.get<unsigned long long>());
    case nlohmann::ordered_json::value_t::number_float:
      return YAML::Node(value.get<double>());
    case nlohmann::ordered_json::value_t::string: {
      YAML::Node node(value.get<std::string>());
      // Mark as explicitly string-typed so numeric-looking values survive
      // a YAML round trip quoted.
      node.SetTag("!");
      return node;
    }
    case nlohmann::ordered_json::value_t::array: {
      YAML::Node node(YAML::NodeType::Sequence);
      for (const auto& item : value) node.push_back(json_to_yaml(item));
      return node;
    }
    case nlohmann::ordered_json::value_t::object: {
      YAML::Node node(YAML::NodeType::Map);
      for (auto it = value.begin(); it != value.end(); ++it) {
        node[it.key()] = json_to_yaml(it.value());
      }
      return node;
    }
    default:
      return YAML::Node(YAML::NodeType::Null);
  }
}

nlohmann::ordered_json yaml_to_json(const YAML::Node& node) {
  using ordered_json = nlohmann::ordered_json;
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar: {
      const std::string& s = node.Scalar();
      if (node.Tag() == "!") return s;  // quoted in source: keep string
      if (s == "null" || s == "~" || s == "Null" || s == "NULL") return nullptr;
      if (s == "true" || s == "True" || s == "TRUE") return true;
      if (s == "false" || s == "False" || s == "FALSE") return false;
      long long i = 0;
      if (looks_like_integer(s, i)) return i;
      double d = 0.0;
      if (looks_like_double(s, d)) return d;
      return s;
    }
    case YAML::NodeType::Sequence: {
      ordered_json arr = ordered_json::array();
      for (const auto& item : node) arr.push_back(yaml_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      ordered_json obj = ordered_json::object();
      for (const auto& kv : node) {
        obj[kv.first.Scalar()] = yaml_to_json(kv.second);
      }
      return obj;
    }
  }
  return nullptr;
}

void emit_yaml_node(YAML::Emitter& out, const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      out << YAML::Null;
      break;
    case YAML::NodeType::Scalar:
      if (node.Tag() == "!") out << YAML::SingleQuoted;
      out << node.Scalar();
      break;
    case YAML::NodeType::Sequence:
      out << YAML::BeginSeq;
      for (const auto& item : node) emit_yaml_node(out, item);
      out << YAML::EndSeq;
      break;
    case YAML::NodeType::Map:
      out << YAML::BeginMap;
      for (const auto& kv : node) {
        out << YAML::Key;
        emit_yaml_node(out, kv.first);
        out << YAML::Value;
        emit_yaml_node(out, kv.second);
      }
      out << YAML::EndMap;
      break;
  }
}

std::string emit_yaml(const YAML::Node& node) {
  YAML::Emitter out;
  out.SetIndent(2);
  emit_yaml_node(out, node);
  if (!out.good()) {
    throw ScanError(ErrorCode::SerializationFailure,
                    std::string("YAML emission failed: ") + out.GetLastError());
  }
  return std::string(out.c_str()) + "\n";
}

}  // namespace idorscan
