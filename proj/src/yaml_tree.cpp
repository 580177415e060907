// Conversion between YAML text and the JSON tree model. Plain scalars are
// resolved with the YAML 1.2 core schema; quoted and block scalars stay text.

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cstdint>
#include <regex>

#include "restgpt/spec_model.hpp"

namespace restgpt {
namespace {

bool is_null_plain(const std::string& s) {
  return s.empty() || s == "~" || s == "null" || s == "Null" || s == "NULL";
}

std::optional<bool> bool_plain(const std::string& s) {
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  return std::nullopt;
}

std::optional<Json> number_plain(const std::string& s) {
  static const std::regex int_re(R"([-+]?[0-9]+)");
  static const std::regex float_re(R"([-+]?(\.[0-9]+|[0-9]+(\.[0-9]*)?)([eE][-+]?[0-9]+)?)");
  if (std::regex_match(s, int_re)) {
    std::string_view digits = s;
    if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec == std::errc{} && ptr == digits.data() + digits.size()) return Json(v);
    return Json(std::stod(s));
  }
  if (std::regex_match(s, float_re)) return Json(std::stod(s));
  return std::nullopt;
}

Json resolve_plain(const std::string& s) {
  if (is_null_plain(s)) return nullptr;
  if (auto b = bool_plain(s)) return *b;
  if (auto n = number_plain(s)) return *n;
  return s;
}

Json to_tree(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Undefined:
    case YAML::NodeType::Null:
      return nullptr;
    case YAML::NodeType::Scalar: {
      const std::string& text = node.Scalar();
      const std::string& tag = node.Tag();
      if (tag == "!" || tag == "tag:yaml.org,2002:str") return text;
      return resolve_plain(text);
    }
    case YAML::NodeType::Sequence: {
      Json out = Json::array();
      for (const auto& item : node) out.push_back(to_tree(item));
      return out;
    }
    case YAML::NodeType::Map: {
      Json out = Json::object();
      for (const auto& kv : node) {
        if (!kv.first.IsScalar()) {
          throw ParseError("mapping keys must be scalars", kv.first.Mark().line + 1,
                           kv.first.Mark().column + 1);
        }
        out[kv.first.Scalar()] = to_tree(kv.second);
      }
      return out;
    }
  }
  return nullptr;
}

bool needs_quotes(const std::string& s) {
  if (!resolve_plain(s).is_string()) return true;
  if (s.front() == ' ' || s.back() == ' ') return true;
  for (unsigned char c : s) {
    if (c < 0x20 || c == 0x7f) return true;
  }
  return false;
}

void emit_string(YAML::Emitter& out, const std::string& s) {
  if (needs_quotes(s)) {
    out << YAML::DoubleQuoted << s;
  } else {
    out << s;
  }
}

void emit(YAML::Emitter& out, const Json& j) {
  switch (j.type()) {
    case Json::value_t::null:
      out << YAML::Null;
      break;
    case Json::value_t::boolean:
      out << (j.get<bool>() ? "true" : "false");
      break;
    case Json::value_t::number_integer:
    case Json::value_t::number_unsigned:
      out << j.dump();
      break;
    case Json::value_t::number_float: {
      std::string text = format_number(j.get<double>());
      if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
      out << text;
      break;
    }
    case Json::value_t::string:
      emit_string(out, j.get<std::string>());
      break;
    case Json::value_t::array:
      if (j.empty()) {
        out << YAML::Flow << YAML::BeginSeq << YAML::EndSeq;
        break;
      }
      out << YAML::BeginSeq;
      for (const auto& item : j) emit(out, item);
      out << YAML::EndSeq;
      break;
    case Json::value_t::object:
      if (j.empty()) {
        out << YAML::Flow << YAML::BeginMap << YAML::EndMap;
        break;
      }
      out << YAML::BeginMap;
      for (const auto& [key, value] : j.items()) {
        out << YAML::Key;
        emit_string(out, key);
        out << YAML::Value;
        emit(out, value);
      }
      out << YAML::EndMap;
      break;
    default:
      out << YAML::Null;
  }
}

}  // namespace

Json parse_yaml(std::string_view text) {
  try {
    YAML::Node root = YAML::Load(std::string(text));
    return to_tree(root);
  } catch (const YAML::ParserException& e) {
    throw ParseError("YAML: " + e.msg, e.mark.line + 1, e.mark.column + 1);
  }
}

std::string emit_yaml(const Json& tree) {
  if (tree.is_string() && tree.get<std::string>().empty()) return "\"\"";
  YAML::Emitter out;
  out.SetIndent(2);
  emit(out, tree);
  return out.c_str();
}

}  // namespace restgpt
