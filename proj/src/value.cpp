#include "restgpt/value.hpp"

#include <charconv>
#include <cmath>
#include <limits>

namespace restgpt {

bool is_number(const Value& v) { return std::holds_alternative<double>(v); }
bool is_text(const Value& v) { return std::holds_alternative<std::string>(v); }
bool is_bool(const Value& v) { return std::holds_alternative<bool>(v); }

std::string format_number(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  if (ec != std::errc{}) return std::to_string(d);
  return std::string(buf, ptr);
}

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  double out = 0;
  auto [ptr, ec] = std::from_chars(first, last, out, std::chars_format::general);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  if (!std::isfinite(out)) return std::nullopt;
  return out;
}

std::string to_display(const Value& v) {
  if (auto* d = std::get_if<double>(&v)) return format_number(*d);
  if (auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  return std::get<std::string>(v);
}

Json to_json(const Value& v) {
  if (auto* d = std::get_if<double>(&v)) {
    double integral = 0;
    if (std::modf(*d, &integral) == 0.0 && std::fabs(*d) < 9.0e15) {
      return static_cast<std::int64_t>(*d);
    }
    return *d;
  }
  if (auto* b = std::get_if<bool>(&v)) return *b;
  return std::get<std::string>(v);
}

std::optional<Value> value_from_json(const Json& j) {
  if (j.is_boolean()) return Value{j.get<bool>()};
  if (j.is_number()) return Value{j.get<double>()};
  if (j.is_string()) return Value{j.get<std::string>()};
  return std::nullopt;
}

bool same_tree(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return a.get<double>() == b.get<double>();
  if (a.type() != b.type()) return false;
  if (a.is_object()) {
    if (a.size() != b.size()) return false;
    for (const auto& [key, value] : a.items()) {
      auto it = b.find(key);
      if (it == b.end() || !same_tree(value, *it)) return false;
    }
    return true;
  }
  if (a.is_array()) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!same_tree(a[i], b[i])) return false;
    }
    return true;
  }
  return a == b;
}

}  // namespace restgpt
