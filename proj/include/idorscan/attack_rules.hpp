#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "idorscan/annotation.hpp"
#include "idorscan/model.hpp"

namespace idorscan::rules {

enum class AttackGroup {
  Enumeration,
  AuthorizationTokenManipulation,
  ParameterPollution,
  EndpointVerbTampering,
};

enum class PatternArity { PerParameter, PerOperation, OperationPair, ParameterPair };

std::string_view group_display_name(AttackGroup group);

struct AttackPattern {
  AttackGroup group;
  std::string technique;
  std::string description;
  PatternArity arity;
};

/// The shipped catalog: 4 groups, 10 techniques.
const std::vector<AttackPattern>& catalog();
const AttackPattern* find_pattern(std::string_view technique);

// Canonical technique names.
inline constexpr std::string_view kEnumerationDumb = "Enumeration without a priori knowledge";
inline constexpr std::string_view kEnumerationApriori = "Enumeration with a priori knowledge";
inline constexpr std::string_view kFileExtension = "Add/Change file extension";
inline constexpr std::string_view kWildcard = "Wildcard replacement/appending";
inline constexpr std::string_view kEncoding = "ID encoding/decoding";
inline constexpr std::string_view kListAppending = "(JSON) List appending";
inline constexpr std::string_view kTokenManipulation = "Authorization token manipulation";
inline constexpr std::string_view kParameterPollution = "Parameter pollution";
inline constexpr std::string_view kAddingParameters = "Adding parameters used in other HTTP Methods";
inline constexpr std::string_view kChangeMethod = "Change HTTP Method (Verb tampering)";

struct TargetedParameter {
  std::string display_name;  // parameter name, "(location)"-suffixed on collision
  std::string name;
  model::ParamLocation location = model::ParamLocation::Query;
  std::vector<std::string> attacks;  // technique names, catalog order
  bool forbidden_response_declared = false;  // "403" among declared responses
  annotation::ParameterProperties props;
  std::optional<std::string> additional_check_rule;
};

struct PotentialVulnerability {
  std::string path;
  AttackGroup group = AttackGroup::Enumeration;
  std::string name;  // group display name
  std::string check_rule;
  std::string description;
  model::HttpVerb verb = model::HttpVerb::Get;  // operation whose request is tampered
  std::optional<model::HttpVerb> paired_verb;   // donor operation for parameter borrowing
  std::string targeted_operation;               // rendered verb or verb pair
  std::vector<TargetedParameter> targeted_parameters;
  bool expected_response_declared = false;  // 403 declared -> expected_response emitted
  std::vector<std::string> unexpected_response_codes;  // declared codes except 403
  std::vector<std::string> techniques;  // all techniques proposed by this finding
};

struct PathFindings {
  std::string path;
  std::vector<PotentialVulnerability> attacks;
};

struct AttackReport {
  std::shared_ptr<const model::ApiSpec> spec;  // for response lookup at emission
  std::vector<PathFindings> entries;           // endpoint order, flagged paths only

  std::size_t total_findings() const;
};

struct EvaluateOptions {
  // Drops the two extension gates: the UUID schema-pattern type rule is
  // annotation-side; here it removes the {string, other} restriction on
  // the file-extension and encoding techniques.
  bool paper_exact = false;
};

/// Enumeration techniques applicable to an identifier of the given type,
/// in catalog order.
std::vector<std::string> enumeration_techniques(annotation::IdType type, bool paper_exact);

bool eval_token_manipulation(const annotation::MethodProperties& mp);

std::vector<std::string> eval_enumeration(const annotation::MethodProperties& mp,
                                          const annotation::ParameterProperties& pp,
                                          bool paper_exact = false);

/// Index pairs of same-named parameters in distinct tamperable locations
/// (path, query, body, json_body), gated on authorization and multiple
/// identifiers.
std::vector<std::pair<std::size_t, std::size_t>> eval_parameter_pollution(
    const annotation::MethodProperties& mp,
    const std::vector<annotation::AnnotatedSpec::ParamRecord>& params);

std::vector<PotentialVulnerability> eval_verb_tampering(
    const annotation::AnnotatedSpec::EndpointRecord& endpoint);

/// Evaluates the full catalog against every endpoint. Per-endpoint work is
/// independent; the parallel kernel merges results in endpoint order.
AttackReport evaluate(const annotation::AnnotatedSpec& annotated,
                      const EvaluateOptions& options = {});
AttackReport evaluate_serial(const annotation::AnnotatedSpec& annotated,
                             const EvaluateOptions& options = {});
AttackReport evaluate_parallel(const annotation::AnnotatedSpec& annotated,
                               const EvaluateOptions& options = {});

}  // namespace idorscan::rules
