#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "restgpt/rule_extractor.hpp"
#include "restgpt/spec_model.hpp"

namespace restgpt {

/// Where an applied rule landed: the descriptor's (or operation's) node and
/// the full JSON pointers of every keyword it wrote.
struct Placement {
  std::string node_pointer;
  std::vector<std::string> keyword_paths;
};

struct AppliedRule {
  ExtractedRule rule;
  Placement placement;
};

struct ConflictRecord {
  ExtractedRule rule;
  /// JSON pointer of the keyword that blocked the rule; empty when the
  /// conflict is not tied to one existing keyword.
  std::string keyword_path;
  Json existing_value;
  std::string reason;
};

struct EnhancedSpec {
  ApiSpecification base;
  std::string service;
  std::vector<AppliedRule> applied;
  std::vector<ConflictRecord> conflicts;
  /// Rules whose every keyword was already present with the same value.
  std::vector<ExtractedRule> duplicates;
  Json document;

  /// The output document re-read through the spec model.
  ApiSpecification enhanced() const;
  std::string serialize(SourceFormat format) const;
  std::string serialize() const { return serialize(base.source_format); }
};

/// A rule whose target or scope does not exist in the specification.
class UnknownTargetError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Applies rules in order. Existing keyword values are never changed; a rule
/// that would contradict one, or that fails a compatibility check, is
/// recorded as a conflict and leaves the document untouched. Throws
/// UnknownTargetError for rules that do not belong to the specification.
EnhancedSpec enhance(const ApiSpecification& spec, const std::vector<ExtractedRule>& rules);

struct Diagnostic {
  std::string code;
  std::string pointer;
  std::string message;
};

Json to_json(const Diagnostic& d);

/// Compatibility checks over a whole document. Codes:
/// style-requires-array-or-object, minimum-exceeds-maximum,
/// default-out-of-range, default-not-in-enum,
/// collection-format-requires-array, dependency-unparseable.
std::vector<Diagnostic> validate_document(const Json& document);
std::vector<Diagnostic> validate_enhanced(const EnhancedSpec& enhanced);

/// {"conflicts": [{rule, existing_keyword: {path, value}, reason}], "duplicates": [rule...]}
Json conflict_report(const EnhancedSpec& enhanced);

}  // namespace restgpt
