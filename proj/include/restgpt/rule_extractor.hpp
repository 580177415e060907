#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "restgpt/constraint_dsl.hpp"
#include "restgpt/llm_backend.hpp"
#include "restgpt/prompt_builder.hpp"
#include "restgpt/spec_model.hpp"

namespace restgpt {

struct Provenance {
  std::string raw_output;
  std::string prompt_digest;
};

struct ParameterConstraint {
  std::optional<double> min;
  std::optional<double> max;
  std::optional<Value> default_value;
  DescriptorIdentity target;
};

struct TypeFormat {
  std::optional<std::string> type;
  std::optional<std::string> items;
  std::optional<std::string> format;
  std::optional<std::string> collection_format;
  DescriptorIdentity target;
};

struct Examples {
  std::vector<Value> values;
  /// True when the values are the complete set of accepted values.
  bool exhaustive = false;
  DescriptorIdentity target;
};

struct OperationalConstraint {
  dsl::ConstraintExpr expr;
  OperationIdentity scope;
};

struct ExtractedRule {
  std::variant<ParameterConstraint, TypeFormat, Examples, OperationalConstraint> body;
  Provenance provenance;

  RuleKind kind() const;
  const std::string& service() const;
  /// Operation of the rule's target or scope.
  OperationIdentity operation() const;
  /// The target descriptor; operational rules return nullptr.
  const DescriptorIdentity* target() const;
  void set_target(const DescriptorIdentity& id);
};

/// JSON form used by extraction logs and ground-truth files. Provenance is
/// included when requested.
Json rule_to_json(const ExtractedRule& rule, bool with_provenance = true);
/// Throws std::invalid_argument on schema violations.
ExtractedRule rule_from_json(const Json& j);

/// Order-insensitive normal form: canonical DSL text for operational rules,
/// sorted example values. Provenance is dropped.
ExtractedRule canonical_rule(const ExtractedRule& rule);
/// Compact text of the canonical form; equal keys mean equal rules.
std::string canonical_key(const ExtractedRule& rule);

struct ExtractionDiagnostics {
  std::vector<std::pair<std::string, std::string>> skipped_lines;
  std::size_t none_responses = 0;
  std::size_t malformed_responses = 0;

  void merge(const ExtractionDiagnostics& other);
};

Json to_json(const ExtractionDiagnostics& d);

/// Line-oriented `key [value]` parsing of one completion. Never throws;
/// unrecognized lines are recorded in `diagnostics`. Returned rules carry
/// empty targets and provenance.
std::vector<ExtractedRule> parse_model_output(std::string_view text, RuleKind kind,
                                              ExtractionDiagnostics* diagnostics = nullptr);

/// Deduplicates (first occurrence wins) and converts values to the
/// descriptor's declared type. Values that cannot be converted are dropped
/// and reported.
std::vector<Value> coerce_values(const std::vector<Value>& values, const ParameterDescriptor& descriptor,
                                 ExtractionDiagnostics* diagnostics = nullptr);

struct ExtractionOptions {
  PromptOptions prompt;
  std::string model_name = "gpt-3.5-turbo";
  double temperature = 0.0;
  std::size_t max_output_tokens = 512;
};

struct ExtractionError {
  DescriptorIdentity descriptor;
  RuleKind kind;
  std::string message;
};

/// One completion exchange, as written to the extraction log.
struct ExtractionRecord {
  DescriptorIdentity descriptor;
  RuleKind kind;
  std::string prompt_digest;
  std::string raw_output;
  std::vector<ExtractedRule> rules;
  ExtractionDiagnostics diagnostics;
  std::optional<std::string> error;
};

struct ExtractionResult {
  std::vector<ExtractedRule> rules;
  ExtractionDiagnostics diagnostics;
  std::vector<ExtractionError> errors;
  std::vector<ExtractionRecord> log;

  void append(ExtractionResult other);
};

CompletionRequest make_request(const ParameterDescriptor& descriptor, RuleKind kind,
                               const PromptTemplateSet& templates, const ExtractionOptions& options);

/// One completion per rule kind. A failing kind is reported in `errors`; the
/// other kinds still contribute their rules.
ExtractionResult extract_rules(const ParameterDescriptor& descriptor, LlmBackend& backend,
                               const PromptTemplateSet& templates, const ExtractionOptions& options = {});

/// Runs only the example-value prompt. Throws BackendError on failure.
std::vector<Value> generate_example_values(const ParameterDescriptor& descriptor, LlmBackend& backend,
                                           const PromptTemplateSet& templates,
                                           const ExtractionOptions& options = {});

/// Extracts rules for every descriptor of the spec using up to `concurrency`
/// worker threads. Output order follows extract_descriptors.
ExtractionResult extract_all(const ApiSpecification& spec, LlmBackend& backend, const PromptTemplateSet& templates,
                             const ExtractionOptions& options = {}, std::size_t concurrency = 1);

/// JSONL, one ExtractionRecord per line.
std::string extraction_log_jsonl(const std::vector<ExtractionRecord>& log);
/// All rules recorded in an extraction log. Throws std::invalid_argument
/// naming the offending line.
std::vector<ExtractedRule> rules_from_extraction_log(std::string_view text);

}  // namespace restgpt
