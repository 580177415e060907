// Acceptance checks AC1-AC9. Prints one PASS/FAIL line per criterion and
// exits nonzero when any fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>

#include "expr_generator.hpp"
#include "fixtures.hpp"
#include "restgpt/cli.hpp"
#include "restgpt/constraint_dsl.hpp"
#include "restgpt/evaluator.hpp"
#include "restgpt/rule_extractor.hpp"
#include "restgpt/spec_enhancer.hpp"

using namespace restgpt;
using restgpt::testsupport::fixture;
using restgpt::testsupport::scratch_dir;
using restgpt::testsupport::slurp;
namespace fs = std::filesystem;

namespace {

struct Failure {
  std::string message;
};

void expect(bool ok, const std::string& message) {
  if (!ok) throw Failure{message};
}

struct Criterion {
  std::string id;
  std::string title;
  double budget_seconds;
  std::function<std::string()> body;
};

const PromptTemplateSet& templates() {
  static const PromptTemplateSet t = PromptTemplateSet::load_default();
  return t;
}

ApiSpecification load(const std::string& name) { return load_spec_file(fixture(name).string()); }

// ---------------------------------------------------------------- AC1

struct PrintedRow {
  const char* service;
  std::size_t tp, fp, fn;
  std::size_t precision, recall, f1;
};

std::string metric_arithmetic() {
  static const PrintedRow rows[] = {
      {"FDIC", 44, 0, 1, 100, 98, 99},          {"Genome Nexus", 75, 0, 6, 100, 93, 96},
      {"LanguageTool", 18, 0, 3, 100, 86, 92},  {"OCVN", 15, 2, 1, 88, 94, 91},
      {"OhSome", 12, 3, 2, 80, 86, 83},         {"OMDb", 2, 0, 0, 100, 100, 100},
      {"REST Countries", 30, 0, 2, 100, 94, 97}, {"Spotify", 86, 2, 4, 98, 96, 97},
      {"YouTube", 24, 2, 8, 92, 75, 83},        {"Total", 306, 9, 27, 97, 92, 94},
  };
  for (const auto& row : rows) {
    EvalMetrics m = compute_metrics({row.tp, row.fp, row.fn});
    expect(m.precision && m.recall && m.f1, std::string(row.service) + ": undefined metric");
    std::ostringstream got;
    got << m.precision->percent() << "/" << m.recall->percent() << "/" << m.f1->percent();
    std::ostringstream want;
    want << row.precision << "/" << row.recall << "/" << row.f1;
    expect(got.str() == want.str(), std::string(row.service) + ": got " + got.str() + ", printed " + want.str());
  }
  return "10 rows, e.g. 306/9/27 -> 97/92/94";
}

// ---------------------------------------------------------------- AC2 / AC6

fs::path golden_output;

std::string golden_fdic() {
  fs::path dir = scratch_dir("acceptance-golden");
  std::string texts[2];
  for (int i = 0; i < 2; ++i) {
    fs::path out_dir = dir / ("run" + std::to_string(i));
    fs::create_directories(out_dir);
    fs::path output = out_dir / "fdic_fig1.enhanced.yaml";
    std::ostringstream out, err;
    int code = run_cli({"enhance", fixture("fdic_fig1.yaml").string(), "--cache",
                        fixture("fdic_fig1.replay.jsonl").string(), "-o", output.string()},
                       out, err);
    expect(code == kExitOk, "enhance exited " + std::to_string(code) + ": " + err.str());
    texts[i] = slurp(output);
    golden_output = output;
  }
  expect(texts[0] == texts[1], "two runs differ");

  ApiSpecification enhanced = build_spec(parse_yaml(texts[0]), SourceFormat::yaml);
  const ParameterDescriptor* sort_order = nullptr;
  const ParameterDescriptor* filters = nullptr;
  for (const auto& op : enhanced.operations) {
    for (const auto& d : op.parameters) {
      if (d.name() == "sort_order") sort_order = &d;
      if (d.name() == "filters") filters = &d;
    }
  }
  expect(sort_order && filters, "parameters missing from output");
  expect(sort_order->machine_keywords.value("enum", Json()) == Json::parse(R"(["ASC","DESC"])"),
         "sort_order enum is not [ASC, DESC]");

  const Json& node = enhanced.raw_document.at(Json::json_pointer(filters->node_pointer));
  static const std::regex kState(R"re(STNAME:"[^"]+")re");
  std::size_t matches = 0;
  for (const char* key : {"example", "x-example-values"}) {
    if (!node.contains(key)) continue;
    Json values = node[key].is_array() ? node[key] : Json::array({node[key]});
    for (const auto& v : values) {
      if (v.is_string() && std::regex_match(v.get<std::string>(), kState)) ++matches;
    }
  }
  expect(matches > 0, "filters has no STNAME:\"<text>\" example");
  return "enum [ASC, DESC], " + std::to_string(matches) + " STNAME example(s), identical bytes";
}

std::string validator_rules() {
  const std::pair<const char*, const char*> cases[] = {
      {"validator_style_on_string.yaml", "style-requires-array-or-object"},
      {"validator_min_gt_max.yaml", "minimum-exceeds-maximum"},
      {"validator_default_outside_enum.yaml", "default-not-in-enum"},
  };
  for (const auto& [name, code] : cases) {
    auto diags = validate_document(load(name).raw_document);
    expect(diags.size() == 1, std::string(name) + ": " + std::to_string(diags.size()) + " diagnostics");
    expect(diags[0].code == code, std::string(name) + ": code " + diags[0].code);
  }
  expect(!golden_output.empty() && fs::exists(golden_output), "golden output not produced");
  auto golden = validate_document(parse_yaml(slurp(golden_output)));
  expect(golden.empty(), "golden output has " + std::to_string(golden.size()) + " diagnostics");
  return "3 fixtures with exactly 1 diagnostic each, golden output clean";
}

// ---------------------------------------------------------------- AC3 / AC4

std::string dependency_oracle() {
  using namespace restgpt::dsl;
  const std::vector<std::string> names{"p", "q", "r", "s"};
  std::size_t checked = 0;
  for (DepOp op : {DepOp::all_or_none, DepOp::zero_or_one, DepOp::only_one, DepOp::or_, DepOp::requires_}) {
    const std::size_t max_arity = op == DepOp::requires_ ? 2 : 4;
    for (std::size_t arity = 2; arity <= max_arity; ++arity) {
      std::vector<ExprPtr> args;
      for (std::size_t i = 0; i < arity; ++i) args.push_back(param(names[i]));
      ConstraintExpr e(dependency(op, args));
      for (unsigned mask = 0; mask < (1u << arity); ++mask) {
        Assignment a;
        std::vector<bool> present;
        for (std::size_t i = 0; i < arity; ++i) {
          bool on = (mask >> i) & 1u;
          present.push_back(on);
          if (on) a[names[i]] = Value(1.0);
        }
        auto expected = testsupport::dependency_holds(op, present) ? TernaryVerdict::satisfied : TernaryVerdict::violated;
        expect(evaluate_constraint(e, a) == expected,
               std::string(to_string(op)) + " mismatch on mask " + std::to_string(mask) + " arity " + std::to_string(arity));
        ++checked;
      }
    }
  }
  return std::to_string(checked) + " assignments, 0 mismatches";
}

std::string dsl_round_trip() {
  using namespace restgpt::dsl;
  testsupport::ExprGenerator gen(777);
  const std::vector<std::optional<Value>> domain{std::nullopt, Value(0.0), Value(2.0), Value(std::string("x"))};
  const auto assignments = testsupport::all_assignments(testsupport::ExprGenerator::names(), domain);
  for (int i = 0; i < 1000; ++i) {
    ConstraintExpr e = gen.next();
    std::string text = print(e);
    expect(parse_constraint(text) == e, "print/parse changed: " + text);
    expect(print(parse_constraint(text)) == text, "printing not stable: " + text);
    ConstraintExpr c = canonicalize(e);
    expect(canonicalize(c) == c, "canonicalize not idempotent: " + text);
    for (const auto& a : assignments) {
      expect(evaluate_constraint(e, a) == evaluate_constraint(c, a), "verdict changed by canonicalization: " + text);
    }
  }
  return "1000 expressions x " + std::to_string(assignments.size()) + " assignments";
}

// ---------------------------------------------------------------- AC5

bool preserves(const Json& before, const Json& after) {
  if (before.is_object() && after.is_object()) {
    for (const auto& [key, value] : before.items()) {
      if (!after.contains(key) || !preserves(value, after[key])) return false;
    }
    return true;
  }
  return same_tree(before, after);
}

void check_run(const ApiSpecification& spec, const std::vector<ExtractedRule>& rules, const std::string& label) {
  EnhancedSpec out = enhance(spec, rules);
  expect(rules.size() == out.applied.size() + out.conflicts.size() + out.duplicates.size(),
         label + ": rule accounting does not add up");
  ApiSpecification after = out.enhanced();
  for (const auto& before : extract_descriptors(spec)) {
    const ParameterDescriptor* now = after.find_descriptor(before.identity);
    expect(now != nullptr, label + ": lost " + to_string(before.identity));
    for (const auto& [key, value] : before.machine_keywords.items()) {
      expect(now->machine_keywords.contains(key) && preserves(value, now->machine_keywords[key]),
             label + ": " + to_string(before.identity) + " keyword '" + key + "' changed");
    }
  }
}

std::string conservativity() {
  const std::vector<std::pair<std::string, std::string>> corpus{
      {"fdic_fig1.yaml", "fdic_fig1.script.json"},
      {"omdb_v2.yaml", "omdb_v2.script.json"},
      {"spotify_v3.json", "spotify_v3.script.json"},
      {"languagetool_v3.yaml", "languagetool_v3.script.json"},
      {"no_descriptions.yaml", ""}};
  std::size_t runs = 0, total_rules = 0;
  for (const auto& [spec_name, script_name] : corpus) {
    ApiSpecification spec = load(spec_name);
    Json script = script_name.empty() ? Json::object() : Json::parse(slurp(fixture(script_name)));
    auto backend = ScriptedBackend::from_script(script);
    auto rules = extract_all(spec, *backend, templates(), {}, 4).rules;
    check_run(spec, rules, spec_name);
    ++runs;
    total_rules += rules.size();

    // The same rules in random orders and random subsets.
    std::mt19937_64 rng(runs);
    for (int trial = 0; trial < 25; ++trial) {
      auto subset = rules;
      std::shuffle(subset.begin(), subset.end(), rng);
      subset.resize(subset.empty() ? 0 : rng() % (subset.size() + 1));
      auto doubled = subset;
      doubled.insert(doubled.end(), subset.begin(), subset.end());
      check_run(spec, doubled, spec_name + " (shuffled)");
      ++runs;
      total_rules += doubled.size();
    }
  }
  return std::to_string(runs) + " runs, " + std::to_string(total_rules) + " rules accounted";
}

// ---------------------------------------------------------------- AC7

std::string sampling() {
  for (std::size_t n = 0; n <= 10; ++n) {
    std::vector<int> values(n);
    std::iota(values.begin(), values.end(), 0);
    expect(sample_values(values, 10, 99) == values, "small list not returned whole (size " + std::to_string(n) + ")");
  }
  std::vector<int> pool(25);
  std::iota(pool.begin(), pool.end(), 0);
  expect(sample_values(pool, 10, 12345) == sample_values(pool, 10, 12345), "same seed, different sample");

  const std::size_t trials = 10000;
  std::vector<std::size_t> hits(pool.size(), 0);
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    auto s = sample_values(pool, 10, seed);
    expect(s.size() == 10, "sample size " + std::to_string(s.size()));
    for (int v : s) ++hits[static_cast<std::size_t>(v)];
  }
  double lo = 1, hi = 0;
  for (std::size_t h : hits) {
    double f = static_cast<double>(h) / static_cast<double>(trials);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
    expect(std::fabs(f - 0.4) <= 0.02, "selection frequency " + std::to_string(f));
  }
  std::ostringstream msg;
  msg.precision(4);
  msg << "frequencies in [" << lo << ", " << hi << "]";
  return msg.str();
}

// ---------------------------------------------------------------- AC8

std::string accuracy() {
  struct Row {
    const char* service;
    std::size_t valid, judged;
    const char* printed;
  };
  // Counts chosen so each per-service rate matches its reference percentage.
  static const Row rows[] = {
      {"FDIC", 55, 71, "77.46%"},           {"Genome Nexus", 29, 76, "38.16%"}, {"LanguageTool", 39, 47, "82.98%"},
      {"OCVN", 33, 83, "39.76%"},           {"OhSome", 36, 41, "87.80%"},       {"OMDb", 24, 25, "96.00%"},
      {"REST Countries", 134, 145, "92.41%"}, {"Spotify", 108, 142, "76.06%"},  {"YouTube", 49, 75, "65.33%"},
  };
  const std::vector<double> printed{77.46, 38.16, 82.98, 39.76, 87.80, 96.00, 92.41, 76.06, 65.33};
  expect(format_percent2(macro_average(printed)) == "72.88%", "macro of printed values " +
                                                                   format_percent2(macro_average(printed)));

  std::vector<ValueJudgment> judgments;
  std::vector<std::string> services;
  for (const auto& row : rows) {
    services.push_back(row.service);
    for (std::size_t i = 0; i < row.judged; ++i) {
      judgments.push_back({{row.service, "/", HttpMethod::get, ParamLocation::query, "p"},
                           "v" + std::to_string(i), true, i < row.valid, "judge"});
    }
  }
  AccuracyReport report = accuracy_report(judgments, services, 72.68);
  expect(report.services.size() == 9, "expected 9 services");
  for (const auto& row : rows) {
    auto it = std::find_if(report.services.begin(), report.services.end(),
                           [&](const AccuracyRow& r) { return r.service == row.service; });
    expect(it != report.services.end(), std::string("missing ") + row.service);
    expect(format_percent2(100.0 * it->accuracy.value()) == row.printed, std::string(row.service) + " accuracy");
  }
  expect(report.macro_average && report.micro_average, "averages missing");
  const std::string macro = format_percent2(*report.macro_average);
  const std::string micro = format_percent2(*report.micro_average);
  // Per-service inputs carry two decimals, so the mean of exact rates may
  // differ from the mean of printed rates by at most half a unit in the last place.
  expect(std::fabs(*report.macro_average - macro_average(printed)) <= 0.005,
         "macro average " + macro + " is outside the rounding of the printed inputs");
  std::string md = to_markdown(report);
  expect(md.find(macro) != std::string::npos && md.find(micro) != std::string::npos, "report lacks an average");
  for (const std::string& needle : {macro, micro, std::string("72.68%"), std::string("points")}) {
    expect(report.footer.find(needle) != std::string::npos, "footer lacks " + needle + ": " + report.footer);
  }
  return "macro of printed rates 72.88%, macro of judged counts " + macro + ", micro " + micro +
         ", footer: " + report.footer;
}

// ---------------------------------------------------------------- AC9

std::string fuzz() {
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<std::size_t> length(0, 512);
  static const std::vector<std::string> tokens{"min", "max", "default", "type", "items", "format",
                                               "collectionFormat", "example", "exhaustive", "constraint",
                                               "[", "]", "[1]", "[-3.5]", "[true]", "[string]", "[csv]",
                                               "[a AND b]", "[Requires(a, b)]", "\"", "'", ",", ":", " ", "\n",
                                               "None", "(", ")"};
  std::size_t rules_seen = 0;
  for (int i = 0; i < 20000; ++i) {
    std::string text;
    const std::size_t n = length(rng);
    if (i < 10000) {
      text.assign(n, '\0');
      for (char& c : text) c = static_cast<char>(byte(rng));
    } else {
      for (std::size_t k = 0; k < n / 4; ++k) {
        text += rng() % 5 == 0 ? std::string(1, static_cast<char>(byte(rng))) : tokens[rng() % tokens.size()];
      }
    }
    for (RuleKind kind : kAllRuleKinds) {
      ExtractionDiagnostics diag;
      std::vector<ExtractedRule> rules;
      try {
        rules = parse_model_output(text, kind, &diag);
      } catch (const std::exception& e) {
        throw Failure{"case " + std::to_string(i) + " threw: " + e.what()};
      }
      for (const auto& r : rules) {
        expect(r.kind() == kind, "rule of the wrong kind");
        if (const auto* pc = std::get_if<ParameterConstraint>(&r.body)) {
          expect(!pc->min || !pc->max || *pc->min <= *pc->max, "min > max");
        }
        if (const auto* ex = std::get_if<Examples>(&r.body)) expect(!ex->values.empty(), "empty example set");
      }
      rules_seen += rules.size();
    }
  }
  return "10000 random-byte and 10000 keyword-mix inputs x 4 kinds, no exceptions, " +
         std::to_string(rules_seen) + " partial rules";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"AC1", "metric arithmetic", 1.0, metric_arithmetic},
      {"AC2", "FDIC golden output", 5.0, golden_fdic},
      {"AC3", "dependency-operator oracle", 0, dependency_oracle},
      {"AC4", "DSL round-trip and canonicalization", 0, dsl_round_trip},
      {"AC5", "spec conservativity and rule accounting", 0, conservativity},
      {"AC6", "validator rules", 0, validator_rules},
      {"AC7", "sampling protocol", 10.0, sampling},
      {"AC8", "accuracy report", 0, accuracy},
      {"AC9", "model-output fuzz robustness", 0, fuzz},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = c.body();
    } catch (const Failure& f) {
      ok = false;
      detail = f.message;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("unexpected exception: ") + e.what();
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ok && c.budget_seconds > 0 && seconds > c.budget_seconds) {
      ok = false;
      detail += "; over the " + std::to_string(c.budget_seconds).substr(0, 4) + " s budget";
    }
    if (!ok) ++failed;
    std::printf("[%s] %s %s (%.3f s): %s\n", ok ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(), seconds,
                detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
