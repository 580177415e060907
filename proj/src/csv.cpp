#include "restgpt/csv.hpp"

#include <stdexcept>

namespace restgpt {

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  std::size_t line = 1;
  std::size_t i = 0;
  bool row_open = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
    row_open = false;
  };

  while (i < text.size()) {
    char c = text[i];
    if (c == '"' && field.empty()) {
      row_open = true;
      std::size_t start_line = line;
      ++i;
      for (;;) {
        if (i >= text.size()) throw std::invalid_argument("CSV line " + std::to_string(start_line) + ": unterminated quote");
        if (text[i] == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        if (text[i] == '\n') ++line;
        field += text[i++];
      }
      if (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
        throw std::invalid_argument("CSV line " + std::to_string(line) + ": unexpected character after quoted field");
      }
      continue;
    }
    if (c == ',') {
      row_open = true;
      end_field();
      ++i;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      ++i;
      if (row_open || !field.empty()) end_row();
      ++line;
    } else {
      row_open = true;
      field += c;
      ++i;
    }
  }
  if (row_open || !field.empty()) end_row();
  return rows;
}

std::string csv_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace restgpt
