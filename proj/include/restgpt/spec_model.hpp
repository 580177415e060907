#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "restgpt/value.hpp"

namespace restgpt {

enum class SourceFormat { yaml, json };
enum class OasVersion { v2, v3 };
enum class HttpMethod { get, post, put, del, patch, head, options };
enum class ParamLocation { query, path, header, cookie, body_property };

std::string_view to_string(SourceFormat f);
std::string_view to_string(HttpMethod m);
std::string_view to_string(ParamLocation l);
std::optional<SourceFormat> source_format_from_string(std::string_view s);
std::optional<HttpMethod> http_method_from_string(std::string_view s);
std::optional<ParamLocation> param_location_from_string(std::string_view s);

/// Malformed YAML or JSON. Line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Well-formed text that is not an OpenAPI document we can model (no
/// `swagger`/`openapi` key, external `$ref`, broken internal `$ref`, ...).
class UnsupportedDocumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OperationIdentity {
  std::string service;
  std::string path;
  HttpMethod method = HttpMethod::get;

  auto operator<=>(const OperationIdentity&) const = default;
};

struct DescriptorIdentity {
  std::string service;
  std::string path;
  HttpMethod method = HttpMethod::get;
  ParamLocation location = ParamLocation::query;
  std::string name;

  OperationIdentity operation() const { return {service, path, method}; }
  auto operator<=>(const DescriptorIdentity&) const = default;
};

/// "service GET /path query:name"
std::string to_string(const DescriptorIdentity& id);
std::string to_string(const OperationIdentity& id);
Json to_json(const DescriptorIdentity& id);
DescriptorIdentity descriptor_identity_from_json(const Json& j);

/// One parameter (or flattened body-schema property) with its machine-readable
/// keywords separated from its free-text description.
struct ParameterDescriptor {
  DescriptorIdentity identity;
  bool required = false;
  /// Only keywords recognized for the document's OAS version, in document order.
  Json machine_keywords = Json::object();
  /// nullopt marks a parameter that has no description at all.
  std::optional<std::string> description;
  /// JSON pointer of the node that owns the parameter (after `$ref` resolution).
  std::string node_pointer;
  /// JSON pointer of the node holding type-level keywords. Equal to
  /// node_pointer except for OpenAPI 3 parameters, where it is their `schema`
  /// (and may not exist yet).
  std::string schema_pointer;

  const std::string& name() const { return identity.name; }
  ParamLocation location() const { return identity.location; }
  bool has_description() const { return description.has_value(); }
  std::string_view description_text() const;

  bool operator==(const ParameterDescriptor&) const = default;
};

struct OperationRecord {
  std::string path;
  HttpMethod method = HttpMethod::get;
  std::optional<std::string> operation_id;
  std::vector<ParameterDescriptor> parameters;
  /// Status code → `$ref` target, or the inline schema type, or "" when absent.
  std::map<std::string, std::string> responses;
  /// Raw entries of the operation's `x-dependencies` extension, if any.
  std::vector<std::string> dependencies;
  std::string pointer;

  OperationIdentity identity(const std::string& service) const { return {service, path, method}; }
  bool operator==(const OperationRecord&) const = default;
};

struct ApiSpecification {
  SourceFormat source_format = SourceFormat::yaml;
  OasVersion oas_version = OasVersion::v2;
  std::string title;
  std::vector<OperationRecord> operations;
  Json raw_document;

  const OperationRecord* find_operation(std::string_view path, HttpMethod method) const;
  const ParameterDescriptor* find_descriptor(const DescriptorIdentity& id) const;
};

/// Model equality: every derived field, plus key-order-insensitive equality of
/// the raw trees. The source format is not compared.
bool semantically_equal(const ApiSpecification& a, const ApiSpecification& b);

/// `service` overrides the identity service name (defaults to `info.title`).
ApiSpecification parse_spec(std::string_view document,
                            std::optional<SourceFormat> format_hint = std::nullopt,
                            std::optional<std::string> service = std::nullopt);

/// Builds the model from an already-parsed tree.
ApiSpecification build_spec(Json document, SourceFormat format,
                            std::optional<std::string> service = std::nullopt);

/// Sorted by (path, method, location, name).
std::vector<ParameterDescriptor> extract_descriptors(const ApiSpecification& spec);

std::string serialize_spec(const ApiSpecification& spec, SourceFormat format);
std::string serialize_document(const Json& document, SourceFormat format);

/// Reads a file and picks the format from its extension (.json vs .yaml/.yml).
ApiSpecification load_spec_file(const std::string& path,
                                std::optional<std::string> service = std::nullopt);
SourceFormat format_for_path(const std::string& path);

/// Keywords the descriptor model keeps for each OAS version.
bool is_machine_keyword(OasVersion version, std::string_view keyword);

// YAML <-> tree conversion (yaml_tree.cpp).
Json parse_yaml(std::string_view text);
std::string emit_yaml(const Json& tree);

}  // namespace restgpt
