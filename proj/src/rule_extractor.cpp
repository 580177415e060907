#include "restgpt/rule_extractor.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>

namespace restgpt {
namespace {

const std::set<std::string> kTypes{"string", "number", "integer", "boolean", "array", "object", "file"};
const std::set<std::string> kCollectionFormats{"csv", "ssv", "tsv", "pipes", "multi"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool is_none_text(std::string_view s) {
  s = trim(s);
  while (!s.empty() && (s.back() == '.' || s.back() == '!')) s.remove_suffix(1);
  while (s.size() >= 2 && (s.front() == '"' || s.front() == '\'' || s.front() == '`') && s.back() == s.front()) {
    s = trim(s.substr(1, s.size() - 2));
  }
  return lower(s) == "none";
}

Json operation_to_json(const OperationIdentity& op) {
  return Json{{"service", op.service}, {"path", op.path}, {"method", to_string(op.method)}};
}

OperationIdentity operation_from_json(const Json& j) {
  OperationIdentity op;
  op.service = j.at("service").get<std::string>();
  op.path = j.at("path").get<std::string>();
  auto method = http_method_from_string(j.at("method").get<std::string>());
  if (!method) throw std::invalid_argument("unknown method '" + j.at("method").get<std::string>() + "'");
  op.method = *method;
  return op;
}

// One `key [value]` occurrence on a line.
struct Segment {
  std::string key;
  std::string value;
};

// Finds the `]` that closes the bracket opened just before `from`, honoring
// nested brackets and double-quoted strings.
std::optional<std::size_t> closing_bracket(std::string_view line, std::size_t from) {
  int depth = 1;
  bool in_quote = false;
  for (std::size_t i = from; i < line.size(); ++i) {
    char c = line[i];
    if (in_quote) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_quote = false;
      }
      continue;
    }
    if (c == '"') {
      in_quote = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']' && --depth == 0) {
      return i;
    }
  }
  return std::nullopt;
}

bool is_key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Every `key [value]` occurrence on a line; prose around them is ignored.
std::vector<Segment> split_segments(std::string_view line) {
  std::vector<Segment> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (!is_key_char(line[i]) || (i > 0 && is_key_char(line[i - 1]))) {
      ++i;
      continue;
    }
    std::size_t key_start = i;
    while (i < line.size() && is_key_char(line[i])) ++i;
    std::size_t key_end = i;
    std::size_t j = i;
    while (j < line.size() && line[j] == ' ') ++j;
    if (j < line.size() && line[j] == ':') ++j;
    while (j < line.size() && line[j] == ' ') ++j;
    if (j >= line.size() || line[j] != '[') continue;
    ++j;
    auto close = closing_bracket(line, j);
    if (!close) {
      // Unbalanced quote inside the value: fall back to the last bracket.
      auto last = line.rfind(']');
      if (last == std::string_view::npos || last < j) break;
      close = last;
    }
    out.push_back({std::string(line.substr(key_start, key_end - key_start)), std::string(line.substr(j, *close - j))});
    i = *close + 1;
  }
  return out;
}

// nullopt when the value is explicitly absent.
std::optional<Value> scalar_from_text(std::string_view raw) {
  std::string_view s = trim(raw);
  if (s.empty() || is_none_text(s) || lower(s) == "null") return std::nullopt;
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    try {
      Json j = Json::parse(s);
      if (j.is_string()) return Value(j.get<std::string>());
    } catch (const Json::exception&) {
    }
    return Value(std::string(s.substr(1, s.size() - 2)));
  }
  if (s.size() >= 2 && s.front() == '\'' && s.back() == '\'') return Value(std::string(s.substr(1, s.size() - 2)));
  if (auto n = parse_number(s)) return Value(*n);
  std::string l = lower(s);
  if (l == "true") return Value(true);
  if (l == "false") return Value(false);
  return Value(std::string(s));
}

void skip(ExtractionDiagnostics* d, std::string_view line, std::string reason) {
  if (d) d->skipped_lines.emplace_back(std::string(line), std::move(reason));
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

bool value_less(const Value& a, const Value& b) { return to_json(a).dump() < to_json(b).dump(); }

std::string declared_type(const ParameterDescriptor& d) {
  auto it = d.machine_keywords.find("type");
  if (it != d.machine_keywords.end() && it->is_string()) return it->get<std::string>();
  return "";
}

std::vector<std::string> operation_parameters(const ApiSpecification& spec, const OperationIdentity& op) {
  std::vector<std::string> names;
  if (const OperationRecord* rec = spec.find_operation(op.path, op.method)) {
    for (const auto& p : rec->parameters) names.push_back(p.name());
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

}  // namespace

// ---------------------------------------------------------------- rule model

RuleKind ExtractedRule::kind() const {
  switch (body.index()) {
    case 0: return RuleKind::parameter_constraint;
    case 1: return RuleKind::type_format;
    case 2: return RuleKind::examples;
    default: return RuleKind::operational;
  }
}

const std::string& ExtractedRule::service() const {
  if (auto* op = std::get_if<OperationalConstraint>(&body)) return op->scope.service;
  return target()->service;
}

OperationIdentity ExtractedRule::operation() const {
  if (auto* op = std::get_if<OperationalConstraint>(&body)) return op->scope;
  return target()->operation();
}

const DescriptorIdentity* ExtractedRule::target() const {
  return std::visit(
      [](const auto& r) -> const DescriptorIdentity* {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, OperationalConstraint>) {
          return nullptr;
        } else {
          return &r.target;
        }
      },
      body);
}

void ExtractedRule::set_target(const DescriptorIdentity& id) {
  std::visit(
      [&](auto& r) {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, OperationalConstraint>) {
          r.scope = id.operation();
        } else {
          r.target = id;
        }
      },
      body);
}

Json rule_to_json(const ExtractedRule& rule, bool with_provenance) {
  Json j{{"kind", to_string(rule.kind())}};
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, OperationalConstraint>) {
          j["scope"] = operation_to_json(r.scope);
          j["expr"] = dsl::print(r.expr);
        } else {
          j["target"] = to_json(r.target);
          if constexpr (std::is_same_v<T, ParameterConstraint>) {
            if (r.min) j["min"] = to_json(Value(*r.min));
            if (r.max) j["max"] = to_json(Value(*r.max));
            if (r.default_value) j["default"] = to_json(*r.default_value);
          } else if constexpr (std::is_same_v<T, TypeFormat>) {
            if (r.type) j["type"] = *r.type;
            if (r.items) j["items"] = *r.items;
            if (r.format) j["format"] = *r.format;
            if (r.collection_format) j["collectionFormat"] = *r.collection_format;
          } else {
            Json values = Json::array();
            for (const auto& v : r.values) values.push_back(to_json(v));
            j["values"] = values;
            j["exhaustive"] = r.exhaustive;
          }
        }
      },
      rule.body);
  if (with_provenance && (!rule.provenance.prompt_digest.empty() || !rule.provenance.raw_output.empty())) {
    j["provenance"] = {{"prompt_digest", rule.provenance.prompt_digest},
                       {"raw_output", rule.provenance.raw_output}};
  }
  return j;
}

ExtractedRule rule_from_json(const Json& j) {
  try {
    if (!j.is_object()) throw std::invalid_argument("rule must be a JSON object");
    auto kind = rule_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown rule kind '" + j.at("kind").get<std::string>() + "'");
    ExtractedRule rule{ParameterConstraint{}, {}};
    switch (*kind) {
      case RuleKind::operational: {
        const Json& e = j.at("expr");
        dsl::ConstraintExpr expr = e.is_string() ? dsl::parse_constraint(e.get<std::string>())
                                                 : dsl::constraint_from_json(e);
        const Json& scope = j.contains("scope") ? j.at("scope") : j.at("target");
        rule.body = OperationalConstraint{std::move(expr), operation_from_json(scope)};
        break;
      }
      case RuleKind::parameter_constraint: {
        ParameterConstraint pc;
        pc.target = descriptor_identity_from_json(j.at("target"));
        if (j.contains("min") && !j["min"].is_null()) pc.min = j["min"].get<double>();
        if (j.contains("max") && !j["max"].is_null()) pc.max = j["max"].get<double>();
        if (j.contains("default") && !j["default"].is_null()) {
          pc.default_value = value_from_json(j["default"]);
          if (!pc.default_value) throw std::invalid_argument("default must be a scalar");
        }
        if (!pc.min && !pc.max && !pc.default_value) {
          throw std::invalid_argument("parameter_constraint needs min, max, or default");
        }
        rule.body = std::move(pc);
        break;
      }
      case RuleKind::type_format: {
        TypeFormat tf;
        tf.target = descriptor_identity_from_json(j.at("target"));
        auto field = [&](const char* key) -> std::optional<std::string> {
          if (!j.contains(key) || j[key].is_null()) return std::nullopt;
          return j[key].get<std::string>();
        };
        tf.type = field("type");
        tf.items = field("items");
        tf.format = field("format");
        tf.collection_format = field("collectionFormat");
        if (!tf.type && !tf.items && !tf.format && !tf.collection_format) {
          throw std::invalid_argument("type_format needs at least one field");
        }
        rule.body = std::move(tf);
        break;
      }
      case RuleKind::examples: {
        Examples ex;
        ex.target = descriptor_identity_from_json(j.at("target"));
        for (const auto& v : j.at("values")) {
          auto value = value_from_json(v);
          if (!value) throw std::invalid_argument("example values must be scalars");
          ex.values.push_back(*value);
        }
        if (ex.values.empty()) throw std::invalid_argument("examples rule has no values");
        ex.exhaustive = j.value("exhaustive", false);
        rule.body = std::move(ex);
        break;
      }
    }
    if (auto p = j.find("provenance"); p != j.end() && p->is_object()) {
      rule.provenance.prompt_digest = p->value("prompt_digest", "");
      rule.provenance.raw_output = p->value("raw_output", "");
    }
    return rule;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed rule: ") + e.what());
  } catch (const dsl::SyntaxError& e) {
    throw std::invalid_argument(std::string("malformed rule expression: ") + e.what());
  }
}

ExtractedRule canonical_rule(const ExtractedRule& rule) {
  ExtractedRule out = rule;
  out.provenance = {};
  if (auto* op = std::get_if<OperationalConstraint>(&out.body)) {
    op->expr = dsl::canonicalize(op->expr);
  } else if (auto* ex = std::get_if<Examples>(&out.body)) {
    std::stable_sort(ex->values.begin(), ex->values.end(), value_less);
    ex->values.erase(std::unique(ex->values.begin(), ex->values.end()), ex->values.end());
  }
  return out;
}

std::string canonical_key(const ExtractedRule& rule) { return rule_to_json(canonical_rule(rule), false).dump(); }

// ---------------------------------------------------------------- diagnostics

void ExtractionDiagnostics::merge(const ExtractionDiagnostics& other) {
  skipped_lines.insert(skipped_lines.end(), other.skipped_lines.begin(), other.skipped_lines.end());
  none_responses += other.none_responses;
  malformed_responses += other.malformed_responses;
}

Json to_json(const ExtractionDiagnostics& d) {
  Json skipped = Json::array();
  for (const auto& [line, reason] : d.skipped_lines) skipped.push_back({{"line", line}, {"reason", reason}});
  return Json{{"skipped_lines", skipped},
              {"none_responses", d.none_responses},
              {"malformed_responses", d.malformed_responses}};
}

// ---------------------------------------------------------------- output parsing

std::vector<ExtractedRule> parse_model_output(std::string_view text, RuleKind kind, ExtractionDiagnostics* diag) {
  std::vector<ExtractedRule> rules;
  if (is_none_text(text)) {
    if (diag) diag->none_responses++;
    return rules;
  }

  std::size_t skipped = 0;
  auto reject = [&](std::string_view line, std::string reason) {
    ++skipped;
    skip(diag, line, std::move(reason));
  };

  ParameterConstraint pc;
  bool pc_seen = false;
  TypeFormat tf;
  bool tf_seen = false;
  Examples ex;

  for (std::string_view raw_line : split_lines(text)) {
    std::string_view line = trim(raw_line);
    if (line.empty() || line.starts_with("```") || is_none_text(line)) continue;
    const std::vector<Segment> segments = split_segments(line);
    if (segments.empty()) {
      reject(line, "no key [value] pairs");
      continue;
    }
    for (const Segment& seg : segments) {
      const std::string key = lower(seg.key);
      const std::string_view value_text = trim(seg.value);
      switch (kind) {
        case RuleKind::operational: {
          if (key != "constraint" && key != "dependency" && key != "rule") {
            reject(line, "unexpected key '" + seg.key + "' for operational output");
            break;
          }
          if (is_none_text(value_text) || value_text.empty()) break;
          try {
            dsl::ConstraintExpr expr = dsl::canonicalize(dsl::parse_constraint(value_text));
            rules.push_back(ExtractedRule{OperationalConstraint{std::move(expr), {}}, {}});
          } catch (const std::exception& e) {
            reject(line, std::string("unparseable constraint: ") + e.what());
          }
          break;
        }
        case RuleKind::parameter_constraint: {
          auto value = scalar_from_text(value_text);
          if (key == "min" || key == "minimum" || key == "max" || key == "maximum") {
            if (!value) break;
            if (!is_number(*value)) {
              reject(line, "non-numeric bound '" + std::string(value_text) + "'");
              break;
            }
            (key.starts_with("min") ? pc.min : pc.max) = std::get<double>(*value);
            pc_seen = true;
          } else if (key == "default") {
            if (!value) break;
            pc.default_value = *value;
            pc_seen = true;
          } else {
            reject(line, "unexpected key '" + seg.key + "' for parameter constraint output");
          }
          break;
        }
        case RuleKind::type_format: {
          auto value = scalar_from_text(value_text);
          if (key != "type" && key != "items" && key != "format" && key != "collectionformat") {
            reject(line, "unexpected key '" + seg.key + "' for type/format output");
            break;
          }
          if (!value) break;
          if (!is_text(*value)) {
            reject(line, "expected a name for '" + seg.key + "'");
            break;
          }
          std::string name = std::get<std::string>(*value);
          if (key == "type" || key == "items") {
            name = lower(name);
            if (!kTypes.contains(name)) {
              reject(line, "unknown type '" + name + "'");
              break;
            }
            (key == "type" ? tf.type : tf.items) = name;
          } else if (key == "format") {
            tf.format = name;
          } else {
            name = lower(name);
            if (!kCollectionFormats.contains(name)) {
              reject(line, "unknown collectionFormat '" + name + "'");
              break;
            }
            tf.collection_format = name;
          }
          tf_seen = true;
          break;
        }
        case RuleKind::examples: {
          auto value = scalar_from_text(value_text);
          if (key == "example" || key == "examples" || key == "value") {
            if (!value) break;
            if (std::find(ex.values.begin(), ex.values.end(), *value) == ex.values.end()) {
              ex.values.push_back(*value);
            }
          } else if (key == "exhaustive") {
            if (value && is_bool(*value)) {
              ex.exhaustive = std::get<bool>(*value);
            } else {
              reject(line, "exhaustive must be true or false");
            }
          } else {
            reject(line, "unexpected key '" + seg.key + "' for example output");
          }
          break;
        }
      }
    }
  }

  if (kind == RuleKind::parameter_constraint && pc_seen) {
    if (pc.min && pc.max && *pc.min > *pc.max) {
      reject(text, "minimum " + format_number(*pc.min) + " exceeds maximum " + format_number(*pc.max));
    } else {
      rules.push_back(ExtractedRule{std::move(pc), {}});
    }
  } else if (kind == RuleKind::type_format && tf_seen) {
    rules.push_back(ExtractedRule{std::move(tf), {}});
  } else if (kind == RuleKind::examples && !ex.values.empty()) {
    rules.push_back(ExtractedRule{std::move(ex), {}});
  }

  if (rules.empty() && skipped > 0 && diag) diag->malformed_responses++;
  return rules;
}

std::vector<Value> coerce_values(const std::vector<Value>& values, const ParameterDescriptor& descriptor,
                                 ExtractionDiagnostics* diag) {
  const std::string type = declared_type(descriptor);
  std::vector<Value> out;
  for (const Value& v : values) {
    std::optional<Value> converted = v;
    if (type == "integer" || type == "number") {
      std::optional<double> n;
      if (is_number(v)) n = std::get<double>(v);
      if (is_text(v)) n = parse_number(trim(std::get<std::string>(v)));
      if (n && type == "integer" && std::floor(*n) != *n) n.reset();
      converted = n ? std::optional<Value>(*n) : std::nullopt;
    } else if (type == "boolean") {
      if (is_text(v)) {
        std::string l = lower(trim(std::get<std::string>(v)));
        converted = l == "true" ? std::optional<Value>(true)
                                : l == "false" ? std::optional<Value>(false) : std::nullopt;
      } else if (!is_bool(v)) {
        converted.reset();
      }
    } else if (type == "string") {
      converted = Value(to_display(v));
    }
    if (!converted) {
      skip(diag, to_display(v), "value does not match declared type '" + type + "'");
      continue;
    }
    if (std::find(out.begin(), out.end(), *converted) == out.end()) out.push_back(*converted);
  }
  return out;
}

// ---------------------------------------------------------------- extraction

void ExtractionResult::append(ExtractionResult other) {
  rules.insert(rules.end(), std::make_move_iterator(other.rules.begin()),
               std::make_move_iterator(other.rules.end()));
  diagnostics.merge(other.diagnostics);
  errors.insert(errors.end(), other.errors.begin(), other.errors.end());
  log.insert(log.end(), std::make_move_iterator(other.log.begin()), std::make_move_iterator(other.log.end()));
}

CompletionRequest make_request(const ParameterDescriptor& descriptor, RuleKind kind,
                               const PromptTemplateSet& templates, const ExtractionOptions& options) {
  PromptBundle bundle = build_prompt(descriptor, kind, templates, options.prompt);
  CompletionRequest request;
  request.messages = render_messages(bundle);
  request.model_name = options.model_name;
  request.temperature = options.temperature;
  request.max_output_tokens = options.max_output_tokens;
  request.tag = {to_string(descriptor.identity), descriptor.name(), std::string(to_string(kind))};
  return request;
}

namespace {

ExtractionRecord run_kind(const ParameterDescriptor& descriptor, RuleKind kind, LlmBackend& backend,
                          const PromptTemplateSet& templates, const ExtractionOptions& options) {
  ExtractionRecord record;
  record.descriptor = descriptor.identity;
  record.kind = kind;
  CompletionRequest request = make_request(descriptor, kind, templates, options);
  record.prompt_digest = cache_key(request);
  CompletionResult result;
  try {
    result = backend.complete(request);
  } catch (const BackendError& e) {
    record.error = e.what();
    return record;
  }
  record.raw_output = result.text;
  record.rules = parse_model_output(result.text, kind, &record.diagnostics);
  std::vector<ExtractedRule> kept;
  for (ExtractedRule& rule : record.rules) {
    rule.set_target(descriptor.identity);
    rule.provenance = {result.text, record.prompt_digest};
    if (auto* ex = std::get_if<Examples>(&rule.body)) {
      ex->values = coerce_values(ex->values, descriptor, &record.diagnostics);
      if (ex->values.empty()) continue;
    }
    kept.push_back(std::move(rule));
  }
  record.rules = std::move(kept);
  return record;
}

}  // namespace

ExtractionResult extract_rules(const ParameterDescriptor& descriptor, LlmBackend& backend,
                               const PromptTemplateSet& templates, const ExtractionOptions& options) {
  ExtractionResult out;
  for (RuleKind kind : kAllRuleKinds) {
    ExtractionRecord record = run_kind(descriptor, kind, backend, templates, options);
    if (record.error) {
      out.errors.push_back({descriptor.identity, kind, *record.error});
    }
    out.rules.insert(out.rules.end(), record.rules.begin(), record.rules.end());
    out.diagnostics.merge(record.diagnostics);
    out.log.push_back(std::move(record));
  }
  return out;
}

std::vector<Value> generate_example_values(const ParameterDescriptor& descriptor, LlmBackend& backend,
                                           const PromptTemplateSet& templates, const ExtractionOptions& options) {
  ExtractionRecord record = run_kind(descriptor, RuleKind::examples, backend, templates, options);
  if (record.error) throw BackendError(*record.error);
  std::vector<Value> values;
  for (const auto& rule : record.rules) {
    if (auto* ex = std::get_if<Examples>(&rule.body)) values.insert(values.end(), ex->values.begin(), ex->values.end());
  }
  return values;
}

ExtractionResult extract_all(const ApiSpecification& spec, LlmBackend& backend, const PromptTemplateSet& templates,
                             const ExtractionOptions& options, std::size_t concurrency) {
  const std::vector<ParameterDescriptor> descriptors = extract_descriptors(spec);
  std::vector<ExtractionResult> results(descriptors.size());
  std::vector<std::exception_ptr> failures(descriptors.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < descriptors.size(); i = next.fetch_add(1)) {
      try {
        ExtractionOptions local = options;
        local.prompt.sibling_parameters = operation_parameters(spec, descriptors[i].identity.operation());
        results[i] = extract_rules(descriptors[i], backend, templates, local);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };

  std::size_t workers = std::clamp<std::size_t>(concurrency, 1, std::max<std::size_t>(descriptors.size(), 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  ExtractionResult merged;
  for (auto& r : results) merged.append(std::move(r));
  return merged;
}

// ---------------------------------------------------------------- log

std::string extraction_log_jsonl(const std::vector<ExtractionRecord>& log) {
  std::string out;
  for (const auto& record : log) {
    Json rules = Json::array();
    for (const auto& rule : record.rules) rules.push_back(rule_to_json(rule, false));
    Json line{{"identity", to_json(record.descriptor)},
              {"rule_kind", to_string(record.kind)},
              {"prompt_digest", record.prompt_digest},
              {"raw_output", record.raw_output},
              {"rules", rules},
              {"diagnostics", to_json(record.diagnostics)}};
    if (record.error) line["error"] = *record.error;
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<ExtractedRule> rules_from_extraction_log(std::string_view text) {
  std::vector<ExtractedRule> rules;
  std::size_t n = 0;
  for (std::string_view line : split_lines(text)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      Json j = Json::parse(line);
      Provenance provenance{j.value("raw_output", ""), j.value("prompt_digest", "")};
      for (const auto& r : j.at("rules")) {
        ExtractedRule rule = rule_from_json(r);
        if (rule.provenance.prompt_digest.empty()) rule.provenance = provenance;
        rules.push_back(std::move(rule));
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument("extraction log line " + std::to_string(n) + ": " + e.what());
    }
  }
  return rules;
}

}  // namespace restgpt
