#include "restgpt/spec_enhancer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

namespace restgpt {
namespace {

using Pointer = Json::json_pointer;

enum class Mode {
  set,         // absent → write; equal → nothing; different → conflict
  set_as_set,  // like set, but arrays compare as unordered sets
  soft,        // absent → write; present → keep whatever is there
  union_list,  // append missing entries to an existing array
};

struct Write {
  std::string owner;
  std::string key;
  Json value;
  Mode mode = Mode::set;
};

struct Blocker {
  std::string path;
  Json existing;
  std::string reason;
};

std::string join_path(const std::string& owner, const std::string& key) {
  std::string escaped;
  for (char c : key) {
    if (c == '~') {
      escaped += "~0";
    } else if (c == '/') {
      escaped += "~1";
    } else {
      escaped += c;
    }
  }
  return owner + "/" + escaped;
}

const Json* find(const Json& doc, const std::string& pointer) {
  try {
    Pointer p(pointer);
    if (!doc.contains(p)) return nullptr;
    return &doc.at(p);
  } catch (const Json::exception&) {
    return nullptr;
  }
}

const Json* find_key(const Json& doc, const std::string& owner, const std::string& key) {
  const Json* node = find(doc, owner);
  if (!node || !node->is_object()) return nullptr;
  auto it = node->find(key);
  return it == node->end() ? nullptr : &*it;
}

bool contains_value(const Json& array, const Json& v) {
  return std::any_of(array.begin(), array.end(), [&](const Json& e) { return same_tree(e, v); });
}

bool same_set(const Json& a, const Json& b) {
  if (!a.is_array() || !b.is_array()) return same_tree(a, b);
  for (const auto& v : a) {
    if (!contains_value(b, v)) return false;
  }
  for (const auto& v : b) {
    if (!contains_value(a, v)) return false;
  }
  return true;
}

// In-document $ref resolution for validation; gives up on anything odd.
const Json* resolve(const Json& doc, const Json* node) {
  for (int hops = 0; node && node->is_object() && hops < 64; ++hops) {
    auto ref = node->find("$ref");
    if (ref == node->end() || !ref->is_string()) return node;
    std::string target = ref->get<std::string>();
    if (!target.starts_with("#")) return nullptr;
    node = find(doc, target.substr(1));
  }
  return node;
}

std::optional<Value> coerce_to_type(const Value& v, const std::string& type) {
  if (type == "integer" || type == "number") {
    std::optional<double> n;
    if (is_number(v)) n = std::get<double>(v);
    if (is_text(v)) n = parse_number(std::get<std::string>(v));
    if (!n || (type == "integer" && std::floor(*n) != *n)) return std::nullopt;
    return Value(*n);
  }
  if (type == "boolean") {
    if (is_bool(v)) return v;
    if (is_text(v)) {
      if (std::get<std::string>(v) == "true") return Value(true);
      if (std::get<std::string>(v) == "false") return Value(false);
    }
    return std::nullopt;
  }
  if (type == "string") return Value(to_display(v));
  return v;
}

std::string v3_style(const std::string& collection_format) {
  if (collection_format == "ssv") return "spaceDelimited";
  if (collection_format == "pipes") return "pipeDelimited";
  if (collection_format == "tsv") return "";
  return "form";
}

class Enhancer {
 public:
  Enhancer(const ApiSpecification& spec, EnhancedSpec& out) : spec_(spec), out_(out), doc_(out.document) {}

  void apply(const ExtractedRule& rule) {
    writes_.clear();
    blocker_.reset();
    std::string node;
    if (const auto* op = std::get_if<OperationalConstraint>(&rule.body)) {
      node = plan_operational(*op);
    } else {
      const DescriptorIdentity& id = *rule.target();
      const ParameterDescriptor* d = spec_.find_descriptor(id);
      if (!d) throw UnknownTargetError("rule targets unknown parameter " + to_string(id));
      node = d->node_pointer;
      std::visit(
          [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, ParameterConstraint>) plan_constraint(r, *d);
            if constexpr (std::is_same_v<T, TypeFormat>) plan_type_format(r, *d);
            if constexpr (std::is_same_v<T, Examples>) plan_examples(r, *d);
          },
          rule.body);
    }
    if (duplicate_) {
      duplicate_ = false;
      out_.duplicates.push_back(rule);
      return;
    }
    if (blocker_) {
      out_.conflicts.push_back({rule, blocker_->path, blocker_->existing, blocker_->reason});
      return;
    }
    std::vector<std::string> changed = commit();
    if (changed.empty()) {
      out_.duplicates.push_back(rule);
    } else {
      out_.applied.push_back({rule, {node, std::move(changed)}});
    }
  }

 private:
  void block(std::string path, std::string reason) {
    if (blocker_) return;
    const Json* existing = path.empty() ? nullptr : find(doc_, path);
    blocker_ = Blocker{std::move(path), existing ? *existing : Json(), std::move(reason)};
  }

  // Queues a write, recording a conflict when an existing value disagrees.
  void plan(std::string owner, std::string key, Json value, Mode mode = Mode::set) {
    const Json* owner_node = find(doc_, owner);
    if (owner_node && !owner_node->is_object()) {
      block(owner, "'" + owner + "' is not an object");
      return;
    }
    if (const Json* existing = find_key(doc_, owner, key)) {
      bool equal = mode == Mode::set_as_set ? same_set(*existing, value) : same_tree(*existing, value);
      if (mode == Mode::union_list && !existing->is_array()) {
        block(join_path(owner, key), "existing '" + key + "' is not a list");
        return;
      }
      if (mode == Mode::set || mode == Mode::set_as_set) {
        if (!equal) block(join_path(owner, key), "existing '" + key + "' differs");
        return;
      }
    }
    writes_.push_back({std::move(owner), std::move(key), std::move(value), mode});
  }

  // The value a keyword will have if the queued writes are committed.
  const Json* effective(const std::string& owner, const std::string& key) const {
    if (const Json* existing = find_key(doc_, owner, key)) return existing;
    for (const auto& w : writes_) {
      if (w.owner == owner && w.key == key) return &w.value;
    }
    return nullptr;
  }

  std::string effective_type(const std::string& owner) const {
    const Json* t = effective(owner, "type");
    return t && t->is_string() ? t->get<std::string>() : "";
  }

  std::vector<std::string> commit() {
    std::vector<std::string> changed;
    for (const auto& w : writes_) {
      Json& owner = doc_[Pointer(w.owner)];
      if (owner.is_null()) owner = Json::object();
      auto it = owner.find(w.key);
      if (it == owner.end()) {
        owner[w.key] = w.value;
        changed.push_back(join_path(w.owner, w.key));
      } else if (w.mode == Mode::union_list) {
        bool grew = false;
        for (const auto& v : w.value) {
          if (!contains_value(*it, v)) {
            it->push_back(v);
            grew = true;
          }
        }
        if (grew) changed.push_back(join_path(w.owner, w.key));
      }
    }
    return changed;
  }

  void plan_constraint(const ParameterConstraint& r, const ParameterDescriptor& d) {
    const std::string& s = d.schema_pointer;
    const std::string type = effective_type(s);
    const bool numeric = type.empty() || type == "integer" || type == "number";
    if ((r.min || r.max) && !numeric) {
      block(join_path(s, "type"), "numeric bounds require a numeric type");
      return;
    }
    if (r.min) plan(s, "minimum", to_json(Value(*r.min)));
    if (r.max) plan(s, "maximum", to_json(Value(*r.max)));
    std::optional<Value> def;
    if (r.default_value) {
      def = coerce_to_type(*r.default_value, type);
      if (!def) {
        block(join_path(s, "type"), "default does not match the declared type");
        return;
      }
      plan(s, "default", to_json(*def));
    }
    if (blocker_) return;

    const Json* lo = effective(s, "minimum");
    const Json* hi = effective(s, "maximum");
    if (lo && hi && lo->is_number() && hi->is_number() && lo->get<double>() > hi->get<double>()) {
      block(join_path(s, "minimum"), "minimum-exceeds-maximum");
      return;
    }
    const Json* dv = effective(s, "default");
    if (dv && dv->is_number()) {
      double v = dv->get<double>();
      if ((lo && lo->is_number() && v < lo->get<double>()) || (hi && hi->is_number() && v > hi->get<double>())) {
        block(join_path(s, "default"), "default-out-of-range");
        return;
      }
    }
    const Json* en = effective(s, "enum");
    if (dv && en && en->is_array() && !contains_value(*en, *dv)) {
      block(join_path(s, "enum"), "default-not-in-enum");
    }
  }

  void plan_type_format(const TypeFormat& r, const ParameterDescriptor& d) {
    const std::string& s = d.schema_pointer;
    if (r.type) plan(s, "type", *r.type);
    if (r.format) plan(s, "format", *r.format);
    if (r.items) plan(join_path(s, "items"), "type", *r.items);
    if (r.collection_format) {
      if (spec_.oas_version == OasVersion::v2) {
        plan(d.node_pointer, "collectionFormat", *r.collection_format);
      } else if (d.location() == ParamLocation::body_property) {
        block("", "collectionFormat has no counterpart on OpenAPI 3 request body properties");
      } else if (v3_style(*r.collection_format).empty()) {
        block("", "collectionFormat '" + *r.collection_format + "' has no OpenAPI 3 style");
      } else {
        plan(d.node_pointer, "style", v3_style(*r.collection_format));
        plan(d.node_pointer, "explode", *r.collection_format == "multi");
      }
    }
    if (blocker_) return;

    const std::string type = effective_type(s);
    if (r.collection_format) {
      if (spec_.oas_version == OasVersion::v2 && type != "array") {
        block(join_path(s, "type"), "collection-format-requires-array");
        return;
      }
      if (spec_.oas_version == OasVersion::v3 && type != "array" && type != "object") {
        block(join_path(s, "type"), "style-requires-array-or-object");
        return;
      }
    }
    if (r.items && type != "array") {
      block(join_path(s, "type"), "items requires an array type");
      return;
    }
    if (r.type && !type.empty() && type != "integer" && type != "number" &&
        (effective(s, "minimum") || effective(s, "maximum"))) {
      block(join_path(s, "minimum"), "numeric bounds require a numeric type");
    }
  }

  void plan_examples(const Examples& r, const ParameterDescriptor& d) {
    const std::string& s = d.schema_pointer;
    const std::string type = effective_type(s);
    const std::string value_owner = type == "array" ? join_path(s, "items") : s;
    const std::string value_type = type == "array" ? effective_type(value_owner) : type;

    Json values = Json::array();
    for (const Value& v : r.values) {
      auto converted = coerce_to_type(v, value_type);
      if (!converted) {
        block(join_path(value_owner, "type"), "example '" + to_display(v) + "' does not match the declared type");
        return;
      }
      Json j = to_json(*converted);
      if (!contains_value(values, j)) values.push_back(std::move(j));
    }
    if (values.empty()) {
      block("", "examples rule has no values");
      return;
    }

    if (r.exhaustive) {
      plan(value_owner, "enum", values, Mode::set_as_set);
      if (blocker_) return;
      const Json* dv = effective(s, "default");
      if (type != "array" && dv && !contains_value(values, *dv)) {
        block(join_path(s, "default"), "default-not-in-enum");
      }
      return;
    }

    if (const Json* en = find_key(doc_, value_owner, "enum"); en && en->is_array()) {
      for (const auto& v : values) {
        if (!contains_value(*en, v)) {
          block(join_path(value_owner, "enum"), "example '" + v.dump() + "' is outside the declared enum");
          return;
        }
      }
    }
    plan(d.node_pointer, "example", values.front(), Mode::soft);
    plan(d.node_pointer, "x-example-values", values, Mode::union_list);
  }

  std::string plan_operational(const OperationalConstraint& r) {
    const OperationRecord* op = spec_.find_operation(r.scope.path, r.scope.method);
    if (!op || r.scope.service != out_.service) {
      throw UnknownTargetError("rule targets unknown operation " + to_string(r.scope));
    }
    std::set<std::string> names;
    for (const auto& p : op->parameters) names.insert(p.name());
    std::string unbound;
    for (const auto& name : dsl::referenced_parameters(r.expr)) {
      if (!names.contains(name)) unbound += (unbound.empty() ? "" : ", ") + name;
    }
    if (!unbound.empty()) {
      block("", "constraint references parameters the operation does not define: " + unbound);
      return op->pointer;
    }
    const std::string text = dsl::print(dsl::canonicalize(r.expr));
    if (const Json* existing = find_key(doc_, op->pointer, "x-dependencies"); existing && existing->is_array()) {
      for (const auto& entry : *existing) {
        if (!entry.is_string()) continue;
        try {
          if (dsl::print(dsl::canonicalize(dsl::parse_constraint(entry.get<std::string>()))) == text) {
            duplicate_ = true;
            return op->pointer;
          }
        } catch (const dsl::SyntaxError&) {
        }
      }
    }
    plan(op->pointer, "x-dependencies", Json::array({text}), Mode::union_list);
    return op->pointer;
  }

  const ApiSpecification& spec_;
  EnhancedSpec& out_;
  Json& doc_;
  std::vector<Write> writes_;
  std::optional<Blocker> blocker_;
  bool duplicate_ = false;
};

std::string service_of(const ApiSpecification& spec) {
  for (const auto& op : spec.operations) {
    if (!op.parameters.empty()) return op.parameters.front().identity.service;
  }
  return spec.title.empty() ? "api" : spec.title;
}

void diag(std::vector<Diagnostic>& out, std::string code, const std::string& pointer, std::string message) {
  out.push_back({std::move(code), pointer, std::move(message)});
}

void check_node(const Json& doc, const Json& node, const std::string& pointer, std::vector<Diagnostic>& out) {
  if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) check_node(doc, node[i], pointer + "/" + std::to_string(i), out);
    return;
  }
  if (!node.is_object()) return;

  auto type_of = [&](const Json& n) -> std::string {
    auto t = n.find("type");
    return t != n.end() && t->is_string() ? t->get<std::string>() : "";
  };

  if (node.contains("in") && node.contains("name") && node.contains("style")) {
    std::string type = type_of(node);
    if (auto schema = node.find("schema"); type.empty() && schema != node.end()) {
      if (const Json* s = resolve(doc, &*schema); s && s->is_object()) type = type_of(*s);
    }
    if (type != "array" && type != "object") {
      diag(out, "style-requires-array-or-object", join_path(pointer, "style"),
           "'style' is only allowed on array or object parameters (type is " +
               (type.empty() ? std::string("unset") : "'" + type + "'") + ")");
    }
  }

  if (auto cf = node.find("collectionFormat"); cf != node.end() && cf->is_string() && type_of(node) != "array") {
    diag(out, "collection-format-requires-array", join_path(pointer, "collectionFormat"),
         "'collectionFormat' is only allowed on array parameters");
  }

  auto lo = node.find("minimum");
  auto hi = node.find("maximum");
  bool has_lo = lo != node.end() && lo->is_number();
  bool has_hi = hi != node.end() && hi->is_number();
  if (has_lo && has_hi && lo->get<double>() > hi->get<double>()) {
    diag(out, "minimum-exceeds-maximum", pointer,
         "minimum " + lo->dump() + " exceeds maximum " + hi->dump());
  }
  if (auto dv = node.find("default"); dv != node.end()) {
    if (dv->is_number() && ((has_lo && dv->get<double>() < lo->get<double>()) ||
                            (has_hi && dv->get<double>() > hi->get<double>()))) {
      diag(out, "default-out-of-range", join_path(pointer, "default"),
           "default " + dv->dump() + " lies outside [minimum, maximum]");
    }
    if (auto en = node.find("enum"); en != node.end() && en->is_array() && !contains_value(*en, *dv)) {
      diag(out, "default-not-in-enum", join_path(pointer, "default"),
           "default " + dv->dump() + " is not one of the enum values");
    }
  }

  if (auto deps = node.find("x-dependencies"); deps != node.end()) {
    if (!deps->is_array()) {
      diag(out, "dependency-unparseable", join_path(pointer, "x-dependencies"), "'x-dependencies' must be a list");
    } else {
      for (std::size_t i = 0; i < deps->size(); ++i) {
        const Json& entry = (*deps)[i];
        std::string where = join_path(pointer, "x-dependencies") + "/" + std::to_string(i);
        if (!entry.is_string()) {
          diag(out, "dependency-unparseable", where, "dependency entries must be text");
          continue;
        }
        try {
          dsl::parse_constraint(entry.get<std::string>());
        } catch (const std::exception& e) {
          diag(out, "dependency-unparseable", where, e.what());
        }
      }
    }
  }

  static const std::set<std::string> kData{"example", "examples", "x-example-values", "enum", "default",
                                           "x-dependencies", "const"};
  for (const auto& [key, child] : node.items()) {
    if (kData.contains(key)) continue;
    check_node(doc, child, join_path(pointer, key), out);
  }
}

}  // namespace

ApiSpecification EnhancedSpec::enhanced() const { return build_spec(document, base.source_format, service); }

std::string EnhancedSpec::serialize(SourceFormat format) const { return serialize_document(document, format); }

EnhancedSpec enhance(const ApiSpecification& spec, const std::vector<ExtractedRule>& rules) {
  EnhancedSpec out;
  out.base = spec;
  out.service = service_of(spec);
  out.document = spec.raw_document;
  Enhancer enhancer(spec, out);
  for (const auto& rule : rules) enhancer.apply(rule);
  return out;
}

Json to_json(const Diagnostic& d) { return Json{{"code", d.code}, {"pointer", d.pointer}, {"message", d.message}}; }

std::vector<Diagnostic> validate_document(const Json& document) {
  std::vector<Diagnostic> out;
  check_node(document, document, "", out);
  return out;
}

std::vector<Diagnostic> validate_enhanced(const EnhancedSpec& enhanced) { return validate_document(enhanced.document); }

Json conflict_report(const EnhancedSpec& enhanced) {
  Json conflicts = Json::array();
  for (const auto& c : enhanced.conflicts) {
    conflicts.push_back({{"rule", rule_to_json(c.rule, false)},
                         {"existing_keyword", {{"path", c.keyword_path}, {"value", c.existing_value}}},
                         {"reason", c.reason}});
  }
  Json duplicates = Json::array();
  for (const auto& r : enhanced.duplicates) duplicates.push_back(rule_to_json(r, false));
  return Json{{"conflicts", conflicts}, {"duplicates", duplicates}};
}

}  // namespace restgpt
