#include "restgpt/evaluator.hpp"

#include <cctype>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include "restgpt/csv.hpp"

namespace restgpt {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::optional<Ratio> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return Ratio{num, den};
}

// Rounds to the nearest hundredth, halves up.
double round2(double x) { return std::floor(x * 100.0 + 0.5 + 1e-9) / 100.0; }

std::string signed2(double x) {
  std::string s = format_percent2(std::fabs(x));
  s.pop_back();
  return (x < 0 ? "-" : "+") + s;
}

std::optional<bool> parse_flag(const std::string& s) {
  std::string l = lower(trim(s));
  if (l == "true" || l == "1" || l == "yes" || l == "y") return true;
  if (l == "false" || l == "0" || l == "no" || l == "n") return false;
  return std::nullopt;
}

}  // namespace

GroundTruthEntry make_truth_entry(const ExtractedRule& rule) {
  ExtractedRule canonical = canonical_rule(rule);
  return {canonical.service(), std::move(canonical)};
}

std::vector<GroundTruthEntry> load_ground_truth(std::string_view jsonl) {
  std::vector<GroundTruthEntry> out;
  std::set<std::string> seen;
  std::size_t n = 0;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    GroundTruthEntry entry;
    try {
      Json j = Json::parse(line);
      if (j.contains("rule")) {
        entry = make_truth_entry(rule_from_json(j.at("rule")));
        if (j.contains("service") && j["service"].get<std::string>() != entry.service) {
          throw std::invalid_argument("service does not match the rule target");
        }
      } else {
        entry = make_truth_entry(rule_from_json(j));
      }
    } catch (const std::exception& e) {
      throw DatasetError("ground truth line " + std::to_string(n) + ": " + e.what());
    }
    if (!seen.insert(canonical_key(entry.rule)).second) {
      throw DatasetError("ground truth line " + std::to_string(n) + ": duplicate entry");
    }
    out.push_back(std::move(entry));
  }
  if (out.empty()) throw DatasetError("ground truth holds no entries");
  return out;
}

EvalCounts compare_rules(const std::vector<ExtractedRule>& extracted, const std::vector<GroundTruthEntry>& truth) {
  std::set<std::string> truth_keys;
  for (const auto& entry : truth) {
    if (!truth_keys.insert(canonical_key(entry.rule)).second) {
      throw DatasetError("duplicate ground truth entry: " + canonical_key(entry.rule));
    }
  }
  std::set<std::string> extracted_keys;
  for (const auto& rule : extracted) extracted_keys.insert(canonical_key(rule));

  EvalCounts c;
  for (const auto& key : extracted_keys) {
    if (truth_keys.contains(key)) {
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = truth_keys.size() - c.tp;
  return c;
}

EvalMetrics compute_metrics(const EvalCounts& c) {
  EvalMetrics m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  // 2PR/(P+R) reduces to 2TP/(2TP+FP+FN); P+R > 0 exactly when TP > 0.
  if (m.precision && m.recall && c.tp > 0) m.f1 = Ratio{2 * c.tp, 2 * c.tp + c.fp + c.fn};
  return m;
}

std::string display_percent(const std::optional<Ratio>& r) {
  return r ? std::to_string(r->percent()) + "%" : "N/A";
}

EvalReport evaluate_extraction(const std::vector<ExtractedRule>& extracted,
                               const std::vector<GroundTruthEntry>& truth) {
  std::map<std::string, std::vector<ExtractedRule>> by_service_rules;
  std::map<std::string, std::vector<GroundTruthEntry>> by_service_truth;
  for (const auto& r : extracted) by_service_rules[r.service()].push_back(r);
  for (const auto& t : truth) by_service_truth[t.service].push_back(t);
  std::set<std::string> services;
  for (const auto& [s, _] : by_service_rules) services.insert(s);
  for (const auto& [s, _] : by_service_truth) services.insert(s);

  EvalReport report;
  report.total.service = "Total";
  for (const auto& s : services) {
    ServiceRow row;
    row.service = s;
    row.truth_rules = by_service_truth[s].size();
    row.counts = compare_rules(by_service_rules[s], by_service_truth[s]);
    row.metrics = compute_metrics(row.counts);
    report.total.truth_rules += row.truth_rules;
    report.total.counts += row.counts;
    report.services.push_back(std::move(row));
  }
  report.total.metrics = compute_metrics(report.total.counts);
  return report;
}

namespace {

Json ratio_json(const std::optional<Ratio>& r) { return r ? Json(r->value()) : Json(); }

Json row_json(const ServiceRow& row) {
  return Json{{"service", row.service},
              {"truth_rules", row.truth_rules},
              {"tp", row.counts.tp},
              {"fp", row.counts.fp},
              {"fn", row.counts.fn},
              {"precision", ratio_json(row.metrics.precision)},
              {"recall", ratio_json(row.metrics.recall)},
              {"f1", ratio_json(row.metrics.f1)},
              {"precision_display", display_percent(row.metrics.precision)},
              {"recall_display", display_percent(row.metrics.recall)},
              {"f1_display", display_percent(row.metrics.f1)}};
}

std::string markdown_row(const ServiceRow& row) {
  std::ostringstream out;
  out << "| " << row.service << " | " << row.truth_rules << " | " << row.counts.tp << " | " << row.counts.fp
      << " | " << row.counts.fn << " | " << display_percent(row.metrics.precision) << " | "
      << display_percent(row.metrics.recall) << " | " << display_percent(row.metrics.f1) << " |\n";
  return out.str();
}

}  // namespace

Json to_json(const EvalReport& report) {
  Json services = Json::array();
  for (const auto& row : report.services) services.push_back(row_json(row));
  return Json{{"services", services}, {"total", row_json(report.total)}};
}

std::string format_row(const ServiceRow& row) {
  std::ostringstream out;
  out << row.service << " | " << row.truth_rules << " | " << row.counts.tp << " | " << row.counts.fp << " | "
      << row.counts.fn << " | " << display_percent(row.metrics.precision) << " | "
      << display_percent(row.metrics.recall) << " | " << display_percent(row.metrics.f1);
  return out.str();
}

std::string to_markdown(const EvalReport& report) {
  std::string out =
      "| REST Service | No. of Rules in Ground Truth | TP | FP | FN | Precision | Recall | F1 |\n"
      "|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& row : report.services) out += markdown_row(row);
  ServiceRow total = report.total;
  total.service = "**Total**";
  out += markdown_row(total);
  return out;
}

// ---------------------------------------------------------------- value judgments

std::vector<ValueJudgment> load_judgments_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  try {
    rows = parse_csv(text);
  } catch (const std::invalid_argument& e) {
    throw DatasetError(e.what());
  }
  if (rows.empty()) throw DatasetError("judgment file is empty");

  static const std::vector<std::string> kColumns{"service", "path",      "method",   "parameter",
                                                 "value",   "syntactic", "semantic", "judge"};
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < rows[0].size(); ++i) column[lower(trim(rows[0][i]))] = i;
  for (const auto& name : kColumns) {
    if (!column.contains(name)) throw DatasetError("judgment file lacks column '" + name + "'");
  }

  std::vector<ValueJudgment> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto cell = [&](const std::string& name) -> std::string {
      std::size_t i = column.at(name);
      if (i >= row.size()) throw DatasetError("judgment record " + std::to_string(r + 1) + ": missing '" + name + "'");
      return row[i];
    };
    if (row.size() == 1 && trim(row[0]).empty()) continue;
    ValueJudgment j;
    j.descriptor.service = trim(cell("service"));
    j.descriptor.path = trim(cell("path"));
    auto method = http_method_from_string(lower(trim(cell("method"))));
    if (!method) throw DatasetError("judgment record " + std::to_string(r + 1) + ": unknown method");
    j.descriptor.method = *method;
    j.descriptor.name = trim(cell("parameter"));
    j.value = cell("value");
    auto syn = parse_flag(cell("syntactic"));
    auto sem = parse_flag(cell("semantic"));
    if (!syn || !sem) throw DatasetError("judgment record " + std::to_string(r + 1) + ": validity must be true or false");
    j.syntactic_valid = *syn;
    j.semantic_valid = *sem;
    if (j.semantic_valid && !j.syntactic_valid) {
      throw DatasetError("judgment record " + std::to_string(r + 1) +
                         ": a semantically valid value must also be syntactically valid");
    }
    j.judge = trim(cell("judge"));
    out.push_back(std::move(j));
  }
  return out;
}

std::string judgments_to_csv(const std::vector<ValueJudgment>& judgments) {
  std::string out = "service,path,method,parameter,value,syntactic,semantic,judge\n";
  for (const auto& j : judgments) {
    out += csv_field(j.descriptor.service) + "," + csv_field(j.descriptor.path) + "," +
           std::string(to_string(j.descriptor.method)) + "," + csv_field(j.descriptor.name) + "," +
           csv_field(j.value) + "," + (j.syntactic_valid ? "true" : "false") + "," +
           (j.semantic_valid ? "true" : "false") + "," + csv_field(j.judge) + "\n";
  }
  return out;
}

bool syntactically_valid(std::string_view value, const Json& keywords) {
  auto text = [&](const char* key) -> std::string {
    auto it = keywords.find(key);
    return it != keywords.end() && it->is_string() ? it->get<std::string>() : "";
  };
  const std::string type = text("type");
  const std::string format = text("format");
  std::optional<Value> typed;
  if (type == "integer" || type == "number") {
    auto n = parse_number(value);
    if (!n || (type == "integer" && std::floor(*n) != *n)) return false;
    if (auto lo = keywords.find("minimum"); lo != keywords.end() && lo->is_number() && *n < lo->get<double>()) {
      return false;
    }
    if (auto hi = keywords.find("maximum"); hi != keywords.end() && hi->is_number() && *n > hi->get<double>()) {
      return false;
    }
    typed = *n;
  } else if (type == "boolean") {
    if (value != "true" && value != "false") return false;
    typed = value == "true";
  } else {
    typed = std::string(value);
  }
  if (auto en = keywords.find("enum"); en != keywords.end() && en->is_array()) {
    Json v = to_json(*typed);
    if (std::none_of(en->begin(), en->end(), [&](const Json& e) { return same_tree(e, v); })) return false;
  }
  static const std::regex kDate(R"(\d{4}-\d{2}-\d{2})");
  static const std::regex kDateTime(R"(\d{4}-\d{2}-\d{2}[Tt ]\d{2}:\d{2}:\d{2}(\.\d+)?([Zz]|[+-]\d{2}:\d{2})?)");
  static const std::regex kEmail(R"([^@\s]+@[^@\s]+\.[^@\s]+)");
  const std::string s(value);
  if (format == "date") return std::regex_match(s, kDate);
  if (format == "date-time") return std::regex_match(s, kDateTime);
  if (format == "email") return std::regex_match(s, kEmail);
  return true;
}

std::string format_percent2(double percent) {
  double r = round2(percent);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f%%", r);
  return buf;
}

double macro_average(const std::vector<double>& percents) {
  if (percents.empty()) throw std::invalid_argument("macro average of no values");
  double sum = 0;
  for (double p : percents) sum += p;
  return sum / static_cast<double>(percents.size());
}

AccuracyReport accuracy_report(const std::vector<ValueJudgment>& judgments,
                               const std::vector<std::string>& expected_services,
                               std::optional<double> reference_average) {
  std::map<std::string, AccuracyRow> rows;
  for (const auto& j : judgments) {
    AccuracyRow& row = rows[j.descriptor.service];
    row.service = j.descriptor.service;
    row.judged++;
    if (j.syntactic_valid) row.syntactic_valid++;
    if (j.semantic_valid) row.semantic_valid++;
  }
  AccuracyReport report;
  report.reference_average = reference_average;
  for (const auto& s : expected_services) {
    if (!rows.contains(s)) report.warnings.push_back("service '" + s + "' has no judgments and is excluded");
  }
  std::vector<double> percents;
  std::size_t judged = 0;
  std::size_t valid = 0;
  for (auto& [name, row] : rows) {
    row.accuracy = Ratio{row.semantic_valid, row.judged};
    percents.push_back(100.0 * row.accuracy.value());
    judged += row.judged;
    valid += row.semantic_valid;
    report.services.push_back(row);
  }
  if (!percents.empty()) {
    report.macro_average = macro_average(percents);
    report.micro_average = 100.0 * static_cast<double>(valid) / static_cast<double>(judged);
  }

  std::ostringstream footer;
  if (report.macro_average) {
    footer << "Macro average (mean of per-service accuracies): " << format_percent2(*report.macro_average)
           << ". Micro average (pooled over all judged values): " << format_percent2(*report.micro_average) << ".";
    if (reference_average) {
      footer << " Reference average " << format_percent2(*reference_average) << " differs from the macro average by "
             << signed2(round2(*report.macro_average) - round2(*reference_average))
             << " points and from the micro average by "
             << signed2(round2(*report.micro_average) - round2(*reference_average)) << " points.";
    }
  } else {
    footer << "No judgments.";
  }
  report.footer = footer.str();
  return report;
}

Json to_json(const AccuracyReport& report) {
  Json services = Json::array();
  for (const auto& row : report.services) {
    services.push_back({{"service", row.service},
                        {"judged", row.judged},
                        {"syntactic_valid", row.syntactic_valid},
                        {"semantic_valid", row.semantic_valid},
                        {"accuracy", format_percent2(100.0 * row.accuracy.value())}});
  }
  auto opt = [](const std::optional<double>& v) { return v ? Json(format_percent2(*v)) : Json(); };
  return Json{{"services", services},
              {"macro_average", opt(report.macro_average)},
              {"micro_average", opt(report.micro_average)},
              {"reference_average", opt(report.reference_average)},
              {"warnings", report.warnings},
              {"footer", report.footer}};
}

std::string to_markdown(const AccuracyReport& report) {
  std::string out = "| REST Service | Judged | Syntactically Valid | Semantically Valid | Accuracy |\n"
                    "|---|---:|---:|---:|---:|\n";
  for (const auto& row : report.services) {
    out += "| " + row.service + " | " + std::to_string(row.judged) + " | " + std::to_string(row.syntactic_valid) +
           " | " + std::to_string(row.semantic_valid) + " | " + format_percent2(100.0 * row.accuracy.value()) +
           " |\n";
  }
  if (report.macro_average) {
    out += "| **Average (macro)** | | | | " + format_percent2(*report.macro_average) + " |\n";
    out += "| **Average (micro)** | | | | " + format_percent2(*report.micro_average) + " |\n";
  }
  for (const auto& w : report.warnings) out += "\nWarning: " + w + "\n";
  out += "\n" + report.footer + "\n";
  return out;
}

}  // namespace restgpt
