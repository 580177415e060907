#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

namespace restgpt {

/// Tree type used for every OpenAPI document. Keys keep insertion order so
/// serialized output is stable and mirrors the input layout.
using Json = nlohmann::ordered_json;

/// A typed scalar: a parameter value, an example, a literal in a constraint.
using Value = std::variant<double, std::string, bool>;

bool is_number(const Value& v);
bool is_text(const Value& v);
bool is_bool(const Value& v);

/// Renders a value the way it would appear in a request (numbers without a
/// trailing ".0" when integral).
std::string to_display(const Value& v);

/// Integral doubles become JSON integers; everything else maps directly.
Json to_json(const Value& v);

/// Returns nullopt for null, arrays, and objects.
std::optional<Value> value_from_json(const Json& j);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double d);

/// Strict decimal parse of the whole string (no leading '+', no trailing junk).
std::optional<double> parse_number(std::string_view text);

/// Structural equality that ignores object key order and treats 1 and 1.0 as
/// the same number.
bool same_tree(const Json& a, const Json& b);

}  // namespace restgpt
