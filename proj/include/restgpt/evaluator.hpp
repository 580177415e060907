#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "restgpt/rule_extractor.hpp"

namespace restgpt {

/// Inconsistent evaluation input: duplicate ground-truth entries, empty truth
/// files, judgments marked semantically but not syntactically valid.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GroundTruthEntry {
  std::string service;
  /// Stored in canonical form.
  ExtractedRule rule;
};

GroundTruthEntry make_truth_entry(const ExtractedRule& rule);

/// JSONL; each line is a rule object or {"service": ..., "rule": {...}}.
/// Throws DatasetError on duplicates, an empty file, or malformed lines.
std::vector<GroundTruthEntry> load_ground_truth(std::string_view jsonl);

struct EvalCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  EvalCounts& operator+=(const EvalCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const EvalCounts&) const = default;
};

/// An exact ratio so that percent rounding never depends on floating error.
struct Ratio {
  std::size_t num = 0;
  std::size_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  /// Nearest integer percent, halves rounded up.
  std::size_t percent() const { return (200 * num + den) / (2 * den); }
};

struct EvalMetrics {
  std::optional<Ratio> precision;
  std::optional<Ratio> recall;
  std::optional<Ratio> f1;
};

/// Canonical matching per (target, rule kind, content). Extracted rules are
/// deduplicated first; each truth entry matches at most once. Throws
/// DatasetError on duplicate truth entries.
EvalCounts compare_rules(const std::vector<ExtractedRule>& extracted, const std::vector<GroundTruthEntry>& truth);

EvalMetrics compute_metrics(const EvalCounts& counts);

/// "97%" or "N/A".
std::string display_percent(const std::optional<Ratio>& r);

struct ServiceRow {
  std::string service;
  std::size_t truth_rules = 0;
  EvalCounts counts;
  EvalMetrics metrics;
};

struct EvalReport {
  std::vector<ServiceRow> services;
  ServiceRow total;
};

/// Per-service rows (sorted by service) plus a total row.
EvalReport evaluate_extraction(const std::vector<ExtractedRule>& extracted,
                               const std::vector<GroundTruthEntry>& truth);

Json to_json(const EvalReport& report);
/// One line per row: "service | truth | TP | FP | FN | P | R | F1".
std::string format_row(const ServiceRow& row);
std::string to_markdown(const EvalReport& report);

/// Up to `n` values drawn uniformly without replacement, deterministic for a
/// seed, returned in their original relative order. All values when there
/// are no more than `n`.
template <class T>
std::vector<T> sample_values(const std::vector<T>& values, std::size_t n = 10, std::uint64_t seed = 0) {
  if (n == 0) throw std::invalid_argument("sample size must be positive");
  if (values.size() <= n) return values;
  std::vector<std::size_t> index(values.size());
  std::iota(index.begin(), index.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, index.size() - 1);
    std::swap(index[i], index[pick(rng)]);
  }
  index.resize(n);
  std::sort(index.begin(), index.end());
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i : index) out.push_back(values[i]);
  return out;
}

struct ValueJudgment {
  DescriptorIdentity descriptor;
  std::string value;
  bool syntactic_valid = false;
  bool semantic_valid = false;
  std::string judge;
};

/// CSV with a header naming the columns service, path, method, parameter,
/// value, syntactic, semantic, judge (any order).
std::vector<ValueJudgment> load_judgments_csv(std::string_view text);
std::string judgments_to_csv(const std::vector<ValueJudgment>& judgments);

/// Type, enum, and common-format conformance of a value rendered as request
/// text. A pre-check for human judges, not a verdict.
bool syntactically_valid(std::string_view value, const Json& machine_keywords);

struct AccuracyRow {
  std::string service;
  std::size_t judged = 0;
  std::size_t syntactic_valid = 0;
  std::size_t semantic_valid = 0;
  /// semantic_valid / judged.
  Ratio accuracy;
};

struct AccuracyReport {
  std::vector<AccuracyRow> services;
  /// Mean of the per-service accuracies, in percent.
  std::optional<double> macro_average;
  /// Pooled semantic-valid fraction over all judgments, in percent.
  std::optional<double> micro_average;
  std::optional<double> reference_average;
  std::vector<std::string> warnings;
  std::string footer;
};

/// Percent with two decimals, halves rounded up ("96.00%").
std::string format_percent2(double percent);
double macro_average(const std::vector<double>& percents);

/// Services listed in `expected_services` that have no judgments are left out
/// and reported in `warnings`. When a reference average is given the footer
/// states how far the macro and micro averages are from it.
AccuracyReport accuracy_report(const std::vector<ValueJudgment>& judgments,
                               const std::vector<std::string>& expected_services = {},
                               std::optional<double> reference_average = std::nullopt);

Json to_json(const AccuracyReport& report);
std::string to_markdown(const AccuracyReport& report);

}  // namespace restgpt
