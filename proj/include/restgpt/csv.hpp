#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace restgpt {

/// RFC 4180 records: quoted fields may hold commas, doubled quotes, and line
/// breaks; CRLF and LF are both accepted. Throws std::invalid_argument
/// naming the line of an unterminated quote or stray character after one.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Quotes the field when it needs it.
std::string csv_field(std::string_view field);

}  // namespace restgpt
