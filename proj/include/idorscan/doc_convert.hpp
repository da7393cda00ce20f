#pragma once

#include <yaml-cpp/yaml.h>

#include <nlohmann/json.hpp>

namespace idorscan {

/// Converts a parsed JSON document into an equivalent YAML node tree,
/// preserving object key order.
YAML::Node json_to_yaml(const nlohmann::ordered_json& value);

/// Converts a YAML node tree into JSON. Plain scalars are type-guessed
/// (null, bool, integer, double, string in that order); scalars that were
/// quoted in the source (tag "!") stay strings.
nlohmann::ordered_json yaml_to_json(const YAML::Node& node);

/// Emits a node tree through an emitter. Scalars that were quoted in the
/// source (tag "!") are re-emitted single-quoted so numeric-looking strings
/// keep their type on reload; everything else relies on the emitter's own
/// escaping.
void emit_yaml_node(YAML::Emitter& out, const YAML::Node& node);

/// Serializes a node tree to YAML text (2-space indent, block style) with a
/// trailing newline. Throws ScanError{SerializationFailure} on emitter
/// faults.
std::string emit_yaml(const YAML::Node& node);

}  // namespace idorscan
