#pragma once

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "restgpt/spec_model.hpp"

namespace restgpt {

enum class RuleKind { operational, parameter_constraint, type_format, examples };

inline constexpr std::array<RuleKind, 4> kAllRuleKinds{RuleKind::operational, RuleKind::parameter_constraint,
                                                       RuleKind::type_format, RuleKind::examples};

std::string_view to_string(RuleKind kind);
std::optional<RuleKind> rule_kind_from_string(std::string_view s);

/// Missing or malformed templates, unknown rule kinds, impossible budgets.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FewShotExample {
  std::string input;
  std::string output;

  bool operator==(const FewShotExample&) const = default;
};

struct PromptTemplate {
  std::string guidelines;
  /// Exactly ten entries, "Case 1" through "Case 10", in order.
  std::vector<std::string> cases;
  std::string grammar;
  std::string output_configuration;
  std::vector<FewShotExample> few_shot_pool;
};

class PromptTemplateSet {
 public:
  /// Reads `<kind>.txt` for each rule kind plus `few_shot.jsonl` from `dir`.
  static PromptTemplateSet load(const std::string& dir);
  /// The templates shipped in the source tree.
  static PromptTemplateSet load_default();

  /// Parses one template file body with [GUIDELINES], [CASES], [GRAMMAR], and
  /// [OUTPUT] section markers.
  static PromptTemplate parse_template(std::string_view text, std::string_view origin = "<template>");

  void set(RuleKind kind, PromptTemplate t);
  bool has(RuleKind kind) const { return templates_.contains(kind); }
  const PromptTemplate& get(RuleKind kind) const;

  /// Adds one JSONL line {"rule_kind": ..., "input": ..., "output": ...}.
  void add_few_shot_line(std::string_view line, std::string_view origin, std::size_t line_number);

 private:
  std::map<RuleKind, PromptTemplate> templates_;
};

inline constexpr std::array<std::string_view, 4> kSectionNames{"guidelines", "cases", "grammar_highlights",
                                                               "output_configurations"};

struct PromptBundle {
  RuleKind rule_kind = RuleKind::examples;
  std::vector<std::pair<std::string, std::string>> sections;
  std::vector<FewShotExample> few_shot;
  std::string subject;
};

struct PromptOptions {
  std::size_t k_shots = 2;
  /// Character-estimated token budget for the whole rendered prompt.
  std::size_t token_budget = 8192;
  /// Other parameter names of the same operation (used by operational prompts).
  std::vector<std::string> sibling_parameters;
};

/// ceil(characters / 4).
std::size_t estimate_tokens(std::string_view text);

/// The subject block that closes every prompt.
std::string render_subject(const ParameterDescriptor& descriptor, RuleKind kind,
                           const std::vector<std::string>& sibling_parameters = {});

/// Few-shot examples are dropped from the end until the rendered prompt fits
/// the budget. If the prompt without any examples still does not fit,
/// ConfigError is thrown; the subject is never shortened.
PromptBundle build_prompt(const ParameterDescriptor& descriptor, RuleKind kind, const PromptTemplateSet& templates,
                          const PromptOptions& options = {});

enum class Role { system, user, assistant };
std::string_view to_string(Role r);

struct ChatMessage {
  Role role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

/// One system message, then a user/assistant pair per few-shot example, then
/// the subject as the final user message.
std::vector<ChatMessage> render_messages(const PromptBundle& bundle);

std::size_t estimate_tokens(const std::vector<ChatMessage>& messages);

}  // namespace restgpt
