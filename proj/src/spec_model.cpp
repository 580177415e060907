#include "restgpt/spec_model.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace restgpt {
namespace {

constexpr std::array<std::pair<std::string_view, HttpMethod>, 7> kMethods{{
    {"get", HttpMethod::get},
    {"post", HttpMethod::post},
    {"put", HttpMethod::put},
    {"delete", HttpMethod::del},
    {"patch", HttpMethod::patch},
    {"head", HttpMethod::head},
    {"options", HttpMethod::options},
}};

constexpr std::array<std::pair<std::string_view, ParamLocation>, 5> kLocations{{
    {"query", ParamLocation::query},
    {"path", ParamLocation::path},
    {"header", ParamLocation::header},
    {"cookie", ParamLocation::cookie},
    {"body-property", ParamLocation::body_property},
}};

constexpr std::array<std::string_view, 8> kV2Keywords{
    "type", "format", "items", "collectionFormat", "enum", "minimum", "maximum", "default"};
constexpr std::array<std::string_view, 7> kSchemaKeywords{
    "type", "format", "items", "enum", "minimum", "maximum", "default"};

constexpr int kMaxRefHops = 64;

std::string escape_token(std::string_view token) {
  std::string out;
  for (char c : token) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

std::string child(const std::string& pointer, std::string_view token) {
  return pointer + "/" + escape_token(token);
}

std::string child(const std::string& pointer, std::size_t index) {
  return pointer + "/" + std::to_string(index);
}

std::string trim_trailing(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

struct Located {
  const Json* node;
  std::string pointer;
};

class Builder {
 public:
  Builder(const Json& doc, OasVersion version, std::string service)
      : doc_(doc), version_(version), service_(std::move(service)) {}

  Located resolve(const Json& node, std::string pointer) const {
    const Json* current = &node;
    for (int hop = 0; hop < kMaxRefHops; ++hop) {
      if (!current->is_object()) return {current, pointer};
      auto it = current->find("$ref");
      if (it == current->end()) return {current, pointer};
      if (!it->is_string()) throw UnsupportedDocumentError("$ref at " + pointer + " is not a string");
      const std::string ref = it->get<std::string>();
      if (ref.empty() || ref.front() != '#') {
        throw UnsupportedDocumentError("external $ref '" + ref + "' at " + pointer +
                                       " (only in-document references are supported)");
      }
      std::string target = ref.substr(1);
      try {
        current = &doc_.at(Json::json_pointer(target));
      } catch (const Json::exception&) {
        throw UnsupportedDocumentError("unresolvable $ref '" + ref + "' at " + pointer);
      }
      pointer = target;
    }
    throw UnsupportedDocumentError("cyclic $ref chain at " + pointer);
  }

  std::vector<OperationRecord> operations() {
    std::vector<OperationRecord> out;
    auto paths = doc_.find("paths");
    if (paths == doc_.end() || paths->is_null()) return out;
    if (!paths->is_object()) throw UnsupportedDocumentError("`paths` must be a mapping");
    for (const auto& [path, raw_item] : paths->items()) {
      Located item = resolve(raw_item, child("/paths", path));
      if (!item.node->is_object()) continue;
      const Json* shared_params = nullptr;
      std::string shared_pointer;
      if (auto it = item.node->find("parameters"); it != item.node->end()) {
        shared_params = &*it;
        shared_pointer = child(item.pointer, "parameters");
      }
      for (const auto& [key, raw_op] : item.node->items()) {
        auto method = http_method_from_string(key);
        if (!method) continue;
        out.push_back(operation(path, *method, raw_op, child(item.pointer, key), shared_params,
                                shared_pointer));
      }
    }
    return out;
  }

 private:
  OperationRecord operation(const std::string& path, HttpMethod method, const Json& op,
                            const std::string& pointer, const Json* shared_params,
                            const std::string& shared_pointer) {
    OperationRecord rec;
    rec.path = path;
    rec.method = method;
    rec.pointer = pointer;
    if (!op.is_object()) throw UnsupportedDocumentError("operation at " + pointer + " is not a mapping");
    if (auto it = op.find("operationId"); it != op.end() && it->is_string()) {
      rec.operation_id = it->get<std::string>();
    }

    // Path-level parameters apply unless the operation redefines the same (name, in).
    std::vector<Located> params;
    auto collect = [&](const Json& list, const std::string& list_pointer) {
      if (!list.is_array()) throw UnsupportedDocumentError("`parameters` at " + list_pointer + " must be a list");
      for (std::size_t i = 0; i < list.size(); ++i) params.push_back(resolve(list[i], child(list_pointer, i)));
    };
    std::vector<Located> own;
    if (auto it = op.find("parameters"); it != op.end()) {
      collect(*it, child(pointer, "parameters"));
      own = std::move(params);
      params.clear();
    }
    if (shared_params) {
      collect(*shared_params, shared_pointer);
      std::erase_if(params, [&](const Located& shared) {
        return std::any_of(own.begin(), own.end(), [&](const Located& o) {
          return o.node->value("name", "") == shared.node->value("name", "") &&
                 o.node->value("in", "") == shared.node->value("in", "");
        });
      });
    }
    params.insert(params.end(), own.begin(), own.end());

    OperationIdentity op_id{service_, path, method};
    for (const auto& p : params) add_parameter(rec, op_id, p);

    if (version_ == OasVersion::v3) {
      if (auto it = op.find("requestBody"); it != op.end()) {
        request_body(rec, op_id, resolve(*it, child(pointer, "requestBody")));
      }
    }

    if (auto it = op.find("responses"); it != op.end() && it->is_object()) {
      for (const auto& [code, raw_resp] : it->items()) {
        rec.responses[code] = response_schema(raw_resp, child(child(pointer, "responses"), code));
      }
    }

    if (auto it = op.find("x-dependencies"); it != op.end() && it->is_array()) {
      for (const auto& dep : *it) {
        rec.dependencies.push_back(dep.is_string() ? dep.get<std::string>() : dep.dump());
      }
    }

    std::set<std::pair<ParamLocation, std::string>> seen;
    for (const auto& d : rec.parameters) {
      if (!seen.emplace(d.location(), d.name()).second) {
        throw UnsupportedDocumentError("duplicate parameter '" + d.name() + "' (" +
                                       std::string(to_string(d.location())) + ") in " +
                                       to_string(op_id));
      }
    }
    return rec;
  }

  std::string response_schema(const Json& raw_resp, const std::string& pointer) const {
    if (!raw_resp.is_object()) return "";
    if (auto ref = raw_resp.find("$ref"); ref != raw_resp.end() && ref->is_string()) {
      return ref->get<std::string>();
    }
    const Json* schema = nullptr;
    if (auto it = raw_resp.find("schema"); it != raw_resp.end()) {
      schema = &*it;
    } else if (auto content = raw_resp.find("content"); content != raw_resp.end() && content->is_object() &&
                                                        !content->empty()) {
      const Json& media = content->begin().value();
      if (auto s = media.find("schema"); s != media.end()) schema = &*s;
    }
    (void)pointer;
    if (!schema || !schema->is_object()) return "";
    if (auto ref = schema->find("$ref"); ref != schema->end() && ref->is_string()) return ref->get<std::string>();
    return schema->value("type", "");
  }

  void add_parameter(OperationRecord& rec, const OperationIdentity& op_id, const Located& p) {
    const Json& node = *p.node;
    if (!node.is_object()) throw UnsupportedDocumentError("parameter at " + p.pointer + " is not a mapping");
    const std::string name = node.value("name", "");
    const std::string in = node.value("in", "");
    if (name.empty()) throw UnsupportedDocumentError("parameter at " + p.pointer + " has no name");

    if (in == "body") {
      auto schema = node.find("schema");
      std::size_t before = rec.parameters.size();
      if (schema != node.end()) {
        Located s = resolve(*schema, child(p.pointer, "schema"));
        std::vector<std::string> stack;
        flatten(rec, op_id, s, "", node.value("required", false), stack);
      }
      if (rec.parameters.size() == before) {
        Located target = schema != node.end() ? resolve(*schema, child(p.pointer, "schema")) : p;
        auto d = leaf(op_id, name, target, node.value("required", false));
        if (!d.description) d.description = description_of(node);
        rec.parameters.push_back(std::move(d));
      }
      return;
    }

    ParamLocation location;
    if (in == "formData") {
      location = ParamLocation::body_property;
    } else if (auto loc = param_location_from_string(in); loc && *loc != ParamLocation::body_property) {
      location = *loc;
    } else {
      throw UnsupportedDocumentError("parameter '" + name + "' at " + p.pointer + " has unsupported location '" +
                                     in + "'");
    }
    if (version_ == OasVersion::v2 && location == ParamLocation::cookie) {
      throw UnsupportedDocumentError("cookie parameters require OpenAPI 3 (" + p.pointer + ")");
    }

    ParameterDescriptor d;
    d.identity = {op_id.service, op_id.path, op_id.method, location, name};
    d.required = node.value("required", false);
    d.node_pointer = p.pointer;
    d.description = description_of(node);

    if (version_ == OasVersion::v2) {
      d.schema_pointer = p.pointer;
      copy_keywords(node, kV2Keywords, d.machine_keywords);
    } else {
      d.schema_pointer = child(p.pointer, "schema");
      if (auto schema = node.find("schema"); schema != node.end()) {
        Located s = resolve(*schema, d.schema_pointer);
        d.schema_pointer = s.pointer;
        if (s.node->is_object()) {
          copy_keywords(*s.node, kSchemaKeywords, d.machine_keywords);
          if (!d.description) d.description = description_of(*s.node);
        }
      }
      if (auto style = node.find("style"); style != node.end()) d.machine_keywords["style"] = *style;
    }
    rec.parameters.push_back(std::move(d));
  }

  void request_body(OperationRecord& rec, const OperationIdentity& op_id, const Located& body) {
    if (!body.node->is_object()) return;
    auto content = body.node->find("content");
    if (content == body.node->end() || !content->is_object() || content->empty()) return;
    std::string media = content->contains("application/json") ? "application/json" : content->begin().key();
    const Json& media_node = (*content)[media];
    auto schema = media_node.find("schema");
    if (schema == media_node.end()) return;
    std::string schema_pointer = child(child(child(body.pointer, "content"), media), "schema");
    Located s = resolve(*schema, schema_pointer);
    bool required = body.node->value("required", false);
    std::size_t before = rec.parameters.size();
    std::vector<std::string> stack;
    flatten(rec, op_id, s, "", required, stack);
    if (rec.parameters.size() == before) {
      auto d = leaf(op_id, "body", s, required);
      if (!d.description) d.description = description_of(*body.node);
      rec.parameters.push_back(std::move(d));
    }
  }

  static bool has_properties(const Json& schema) {
    if (!schema.is_object()) return false;
    auto props = schema.find("properties");
    if (props != schema.end() && props->is_object() && !props->empty()) return true;
    auto all = schema.find("allOf");
    return all != schema.end() && all->is_array() && !all->empty();
  }

  // Walks object properties depth-first, emitting one descriptor per leaf.
  void flatten(OperationRecord& rec, const OperationIdentity& op_id, const Located& schema,
               const std::string& prefix, bool parent_required, std::vector<std::string>& stack) {
    if (!schema.node->is_object()) return;
    stack.push_back(schema.pointer);
    if (auto all = schema.node->find("allOf"); all != schema.node->end() && all->is_array()) {
      for (std::size_t i = 0; i < all->size(); ++i) {
        Located part = resolve((*all)[i], child(child(schema.pointer, "allOf"), i));
        if (std::find(stack.begin(), stack.end(), part.pointer) == stack.end()) {
          flatten(rec, op_id, part, prefix, parent_required, stack);
        }
      }
    }
    auto props = schema.node->find("properties");
    if (props != schema.node->end() && props->is_object()) {
      std::set<std::string> required_names;
      if (auto req = schema.node->find("required"); req != schema.node->end() && req->is_array()) {
        for (const auto& r : *req) {
          if (r.is_string()) required_names.insert(r.get<std::string>());
        }
      }
      for (const auto& [prop, raw] : props->items()) {
        std::string name = prefix.empty() ? prop : prefix + "." + prop;
        Located sub = resolve(raw, child(child(schema.pointer, "properties"), prop));
        bool required = required_names.contains(prop) && (prefix.empty() ? true : parent_required);
        bool cyclic = std::find(stack.begin(), stack.end(), sub.pointer) != stack.end();
        if (has_properties(*sub.node) && !cyclic) {
          flatten(rec, op_id, sub, name, required, stack);
        } else {
          rec.parameters.push_back(leaf(op_id, name, sub, required));
        }
      }
    }
    stack.pop_back();
  }

  ParameterDescriptor leaf(const OperationIdentity& op_id, const std::string& name, const Located& schema,
                           bool required) const {
    ParameterDescriptor d;
    d.identity = {op_id.service, op_id.path, op_id.method, ParamLocation::body_property, name};
    d.required = required;
    d.node_pointer = schema.pointer;
    d.schema_pointer = schema.pointer;
    if (schema.node->is_object()) {
      if (version_ == OasVersion::v2) {
        copy_keywords(*schema.node, kV2Keywords, d.machine_keywords);
      } else {
        copy_keywords(*schema.node, kSchemaKeywords, d.machine_keywords);
      }
      d.description = description_of(*schema.node);
    }
    return d;
  }

  static std::optional<std::string> description_of(const Json& node) {
    if (!node.is_object()) return std::nullopt;
    auto it = node.find("description");
    if (it == node.end() || !it->is_string()) return std::nullopt;
    return trim_trailing(it->get<std::string>());
  }

  template <std::size_t N>
  static void copy_keywords(const Json& node, const std::array<std::string_view, N>& allowed, Json& out) {
    for (const auto& [key, value] : node.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) out[key] = value;
    }
  }

  const Json& doc_;
  OasVersion version_;
  std::string service_;
};

OasVersion detect_version(const Json& doc) {
  if (auto it = doc.find("swagger"); it != doc.end()) {
    std::string v = it->is_string() ? it->get<std::string>() : it->is_number() ? it->dump() : "";
    if (v.starts_with("2")) return OasVersion::v2;
    throw UnsupportedDocumentError("unsupported swagger version '" + v + "'");
  }
  if (auto it = doc.find("openapi"); it != doc.end()) {
    std::string v = it->is_string() ? it->get<std::string>() : it->is_number() ? it->dump() : "";
    if (v.starts_with("3")) return OasVersion::v3;
    throw UnsupportedDocumentError("unsupported openapi version '" + v + "'");
  }
  throw UnsupportedDocumentError("missing version key: expected `swagger` or `openapi`");
}

std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
  int line = 1;
  int column = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

bool keywords_equal(const std::vector<ParameterDescriptor>& a, const std::vector<ParameterDescriptor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].identity != b[i].identity || a[i].required != b[i].required ||
        a[i].description != b[i].description || a[i].node_pointer != b[i].node_pointer ||
        a[i].schema_pointer != b[i].schema_pointer || !same_tree(a[i].machine_keywords, b[i].machine_keywords)) {
      return false;
    }
  }
  return true;
}

}  // namespace

ParseError::ParseError(const std::string& what, int line, int column)
    : std::runtime_error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
      line_(line),
      column_(column) {}

std::string_view to_string(SourceFormat f) { return f == SourceFormat::json ? "json" : "yaml"; }

std::string_view to_string(HttpMethod m) {
  for (const auto& [name, value] : kMethods) {
    if (value == m) return name;
  }
  return "get";
}

std::string_view to_string(ParamLocation l) {
  for (const auto& [name, value] : kLocations) {
    if (value == l) return name;
  }
  return "query";
}

std::optional<SourceFormat> source_format_from_string(std::string_view s) {
  if (s == "json") return SourceFormat::json;
  if (s == "yaml" || s == "yml") return SourceFormat::yaml;
  return std::nullopt;
}

std::optional<HttpMethod> http_method_from_string(std::string_view s) {
  for (const auto& [name, value] : kMethods) {
    if (name == s) return value;
  }
  return std::nullopt;
}

std::optional<ParamLocation> param_location_from_string(std::string_view s) {
  for (const auto& [name, value] : kLocations) {
    if (name == s) return value;
  }
  return std::nullopt;
}

std::string to_string(const OperationIdentity& id) {
  std::string method(to_string(id.method));
  std::transform(method.begin(), method.end(), method.begin(), ::toupper);
  return id.service + " " + method + " " + id.path;
}

std::string to_string(const DescriptorIdentity& id) {
  return to_string(id.operation()) + " " + std::string(to_string(id.location)) + ":" + id.name;
}

Json to_json(const DescriptorIdentity& id) {
  return Json{{"service", id.service},
              {"path", id.path},
              {"method", to_string(id.method)},
              {"location", to_string(id.location)},
              {"name", id.name}};
}

DescriptorIdentity descriptor_identity_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("descriptor identity must be an object");
  DescriptorIdentity id;
  id.service = j.at("service").get<std::string>();
  id.path = j.at("path").get<std::string>();
  auto method = http_method_from_string(j.at("method").get<std::string>());
  if (!method) throw std::invalid_argument("unknown method '" + j.at("method").get<std::string>() + "'");
  id.method = *method;
  std::string loc = j.value("location", "query");
  auto location = param_location_from_string(loc);
  if (!location) throw std::invalid_argument("unknown location '" + loc + "'");
  id.location = *location;
  id.name = j.value("name", "");
  return id;
}

std::string_view ParameterDescriptor::description_text() const {
  return description ? std::string_view(*description) : std::string_view();
}

const OperationRecord* ApiSpecification::find_operation(std::string_view path, HttpMethod method) const {
  for (const auto& op : operations) {
    if (op.path == path && op.method == method) return &op;
  }
  return nullptr;
}

const ParameterDescriptor* ApiSpecification::find_descriptor(const DescriptorIdentity& id) const {
  const OperationRecord* op = find_operation(id.path, id.method);
  if (!op) return nullptr;
  for (const auto& p : op->parameters) {
    if (p.identity == id) return &p;
  }
  return nullptr;
}

bool semantically_equal(const ApiSpecification& a, const ApiSpecification& b) {
  if (a.oas_version != b.oas_version || a.title != b.title) return false;
  if (a.operations.size() != b.operations.size()) return false;
  for (std::size_t i = 0; i < a.operations.size(); ++i) {
    const auto& x = a.operations[i];
    const auto& y = b.operations[i];
    if (x.path != y.path || x.method != y.method || x.operation_id != y.operation_id ||
        x.responses != y.responses || x.dependencies != y.dependencies || x.pointer != y.pointer ||
        !keywords_equal(x.parameters, y.parameters)) {
      return false;
    }
  }
  return same_tree(a.raw_document, b.raw_document);
}

bool is_machine_keyword(OasVersion version, std::string_view keyword) {
  if (version == OasVersion::v2) {
    return std::find(kV2Keywords.begin(), kV2Keywords.end(), keyword) != kV2Keywords.end();
  }
  return keyword == "style" || std::find(kSchemaKeywords.begin(), kSchemaKeywords.end(), keyword) !=
                                   kSchemaKeywords.end();
}

ApiSpecification build_spec(Json document, SourceFormat format, std::optional<std::string> service) {
  if (!document.is_object()) throw UnsupportedDocumentError("document root must be a mapping");
  ApiSpecification spec;
  spec.source_format = format;
  spec.oas_version = detect_version(document);
  if (auto info = document.find("info"); info != document.end() && info->is_object()) {
    spec.title = info->value("title", "");
  }
  std::string service_name = service.value_or(spec.title.empty() ? "api" : spec.title);
  Builder builder(document, spec.oas_version, service_name);
  spec.operations = builder.operations();

  std::set<std::pair<std::string, HttpMethod>> seen;
  for (const auto& op : spec.operations) {
    if (!seen.emplace(op.path, op.method).second) {
      throw UnsupportedDocumentError("duplicate operation " + std::string(to_string(op.method)) + " " + op.path);
    }
  }
  spec.raw_document = std::move(document);
  return spec;
}

ApiSpecification parse_spec(std::string_view document, std::optional<SourceFormat> format_hint,
                            std::optional<std::string> service) {
  auto first = document.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) throw UnsupportedDocumentError("empty document");
  SourceFormat format =
      format_hint.value_or(document[first] == '{' || document[first] == '[' ? SourceFormat::json : SourceFormat::yaml);
  Json tree;
  if (format == SourceFormat::json) {
    try {
      tree = Json::parse(document);
    } catch (const Json::parse_error& e) {
      auto [line, column] = line_column(document, e.byte);
      throw ParseError(std::string("JSON: ") + e.what(), line, column);
    }
  } else {
    tree = parse_yaml(document);
  }
  return build_spec(std::move(tree), format, std::move(service));
}

std::vector<ParameterDescriptor> extract_descriptors(const ApiSpecification& spec) {
  std::vector<ParameterDescriptor> out;
  for (const auto& op : spec.operations) {
    out.insert(out.end(), op.parameters.begin(), op.parameters.end());
  }
  auto key = [](const ParameterDescriptor& d) {
    return std::make_tuple(d.identity.path, to_string(d.identity.method), to_string(d.identity.location),
                           d.identity.name);
  };
  std::stable_sort(out.begin(), out.end(),
                   [&](const ParameterDescriptor& a, const ParameterDescriptor& b) { return key(a) < key(b); });
  return out;
}

std::string serialize_document(const Json& document, SourceFormat format) {
  if (format == SourceFormat::json) return document.dump(2) + "\n";
  return emit_yaml(document) + "\n";
}

std::string serialize_spec(const ApiSpecification& spec, SourceFormat format) {
  return serialize_document(spec.raw_document, format);
}

SourceFormat format_for_path(const std::string& path) {
  auto dot = path.rfind('.');
  if (dot != std::string::npos && path.substr(dot) == ".json") return SourceFormat::json;
  return SourceFormat::yaml;
}

ApiSpecification load_spec_file(const std::string& path, std::optional<std::string> service) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str(), format_for_path(path), std::move(service));
}

}  // namespace restgpt
