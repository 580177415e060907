#include "restgpt/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "restgpt/evaluator.hpp"
#include "restgpt/llm_backend.hpp"
#include "restgpt/rule_extractor.hpp"
#include "restgpt/spec_enhancer.hpp"

namespace restgpt {
namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::string backend = "replay";
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  std::size_t max_tokens = 512;
  std::string cache;
  std::string templates;
  std::size_t concurrency = 4;
  std::uint64_t seed = 0;
  std::string format;
  std::string base_url = "https://api.openai.com";
  std::string script;
  std::string service;
  std::size_t shots = 2;
  bool lenient = false;
  bool allow_conflicts = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << body;
  if (!out.flush()) throw std::runtime_error("cannot write '" + path.string() + "'");
}

PromptTemplateSet templates_for(const RunConfig& cfg) {
  return cfg.templates.empty() ? PromptTemplateSet::load_default() : PromptTemplateSet::load(cfg.templates);
}

ExtractionOptions extraction_options(const RunConfig& cfg) {
  ExtractionOptions o;
  o.model_name = cfg.model;
  o.temperature = cfg.temperature;
  o.max_output_tokens = cfg.max_tokens;
  o.prompt.k_shots = cfg.shots;
  return o;
}

std::shared_ptr<LlmBackend> scripted_backend(const RunConfig& cfg) {
  if (cfg.script.empty()) throw std::runtime_error("the scripted backend needs --script");
  Json script;
  try {
    script = Json::parse(read_file(cfg.script));
  } catch (const Json::parse_error& e) {
    throw std::runtime_error("script '" + cfg.script + "' is not JSON: " + e.what());
  }
  return std::make_shared<BoundedBackend>(ScriptedBackend::from_script(script), cfg.concurrency);
}

std::shared_ptr<LlmBackend> live_backend(const RunConfig& cfg) {
  HttpBackendConfig http;
  http.base_url = cfg.base_url;
  http.concurrency = cfg.concurrency;
  http.seed = cfg.seed;
  return HttpBackend::from_environment(http);
}

std::shared_ptr<ReplayCache> open_cache(const RunConfig& cfg, bool must_exist) {
  if (cfg.cache.empty()) throw std::runtime_error("--cache is required for the " + cfg.backend + " backend");
  if (fs::exists(cfg.cache)) return std::make_shared<ReplayCache>(ReplayCache::load(cfg.cache));
  if (must_exist) throw std::runtime_error("replay cache '" + cfg.cache + "' does not exist");
  return std::make_shared<ReplayCache>();
}

std::shared_ptr<LlmBackend> make_backend(const RunConfig& cfg) {
  if (cfg.backend == "live") return live_backend(cfg);
  if (cfg.backend == "scripted") return scripted_backend(cfg);
  if (cfg.backend == "replay") {
    return std::make_shared<ReplayBackend>(open_cache(cfg, !cfg.lenient), nullptr, !cfg.lenient);
  }
  throw std::runtime_error("unknown backend '" + cfg.backend + "'");
}

std::optional<std::string> service_override(const RunConfig& cfg) {
  return cfg.service.empty() ? std::nullopt : std::optional<std::string>(cfg.service);
}

SourceFormat output_format(const RunConfig& cfg, const ApiSpecification& spec) {
  if (cfg.format.empty()) return spec.source_format;
  auto f = source_format_from_string(cfg.format);
  if (!f) throw std::runtime_error("unknown format '" + cfg.format + "' (expected yaml or json)");
  return *f;
}

// Reports per-kind backend failures; true when there were any.
bool report_errors(const ExtractionResult& result, std::ostream& err) {
  for (const auto& e : result.errors) {
    err << "restgpt: " << to_string(e.descriptor) << " [" << to_string(e.kind) << "]: " << e.message << "\n";
  }
  return !result.errors.empty();
}

int cmd_enhance(const RunConfig& cfg, const std::string& input, const std::string& output, std::ostream& out,
                std::ostream& err) {
  ApiSpecification spec = load_spec_file(input, service_override(cfg));
  PromptTemplateSet templates = templates_for(cfg);
  auto backend = make_backend(cfg);
  ExtractionResult result = extract_all(spec, *backend, templates, extraction_options(cfg), cfg.concurrency);

  const SourceFormat format = output_format(cfg, spec);
  const fs::path in_path(input);
  fs::path out_path = output;
  if (out_path.empty()) {
    std::string ext = format == spec.source_format ? in_path.extension().string()
                                                   : (format == SourceFormat::json ? ".json" : ".yaml");
    out_path = in_path.parent_path() / (in_path.stem().string() + ".enhanced" + ext);
  }
  const fs::path dir = out_path.parent_path();
  const std::string stem = in_path.stem().string();
  const fs::path log_path = dir / (stem + ".extraction.jsonl");
  const fs::path conflict_path = dir / (stem + ".conflicts.json");

  write_file(log_path, extraction_log_jsonl(result.log));
  if (report_errors(result, err)) {
    err << "restgpt: extraction failed for " << result.errors.size() << " request(s); no enhanced spec written\n";
    return kExitError;
  }

  EnhancedSpec enhanced = enhance(spec, result.rules);
  write_file(out_path, enhanced.serialize(format));
  if (!enhanced.conflicts.empty()) {
    write_file(conflict_path, conflict_report(enhanced).dump(2) + "\n");
  } else if (fs::exists(conflict_path)) {
    fs::remove(conflict_path);
  }

  err << "restgpt: " << result.rules.size() << " rules extracted; " << enhanced.applied.size() << " applied, "
      << enhanced.conflicts.size() << " conflicting, " << enhanced.duplicates.size() << " duplicate\n";
  if (result.diagnostics.malformed_responses > 0) {
    err << "restgpt: " << result.diagnostics.malformed_responses << " completion(s) could not be parsed\n";
  }
  out << out_path.string() << "\n";
  if (!enhanced.conflicts.empty() && !cfg.allow_conflicts) return kExitFindings;
  return kExitOk;
}

int cmd_record(const RunConfig& cfg, const std::string& input, std::ostream& out, std::ostream& err) {
  ApiSpecification spec = load_spec_file(input, service_override(cfg));
  PromptTemplateSet templates = templates_for(cfg);
  std::shared_ptr<LlmBackend> upstream =
      cfg.backend == "scripted" ? scripted_backend(cfg) : live_backend(cfg);
  auto cache = open_cache(cfg, false);
  const std::size_t before = cache->size();
  auto recorder = std::make_shared<ReplayBackend>(cache, upstream);
  ExtractionResult result = extract_all(spec, *recorder, templates, extraction_options(cfg), cfg.concurrency);
  cache->save(cfg.cache);
  err << "restgpt: " << recorder->upstream_calls() << " upstream call(s); cache grew from " << before << " to "
      << cache->size() << " entries\n";
  out << cfg.cache << "\n";
  return report_errors(result, err) ? kExitError : kExitOk;
}

int cmd_evaluate(const std::string& log_path, const std::string& truth_path, const std::string& report_path,
                 const std::string& markdown_path, const std::string& judgments_path,
                 std::optional<double> reference, std::ostream& out) {
  std::vector<ExtractedRule> extracted;
  try {
    extracted = rules_from_extraction_log(read_file(log_path));
  } catch (const std::invalid_argument& e) {
    throw DatasetError(e.what());
  }
  std::vector<GroundTruthEntry> truth = load_ground_truth(read_file(truth_path));
  EvalReport report = evaluate_extraction(extracted, truth);

  out << "REST Service | No. of Rules in Ground Truth | TP | FP | FN | Precision | Recall | F1\n";
  for (const auto& row : report.services) out << format_row(row) << "\n";
  out << format_row(report.total) << "\n";

  Json json = to_json(report);
  std::string markdown = to_markdown(report);
  if (!judgments_path.empty()) {
    std::set<std::string> services;
    for (const auto& row : report.services) services.insert(row.service);
    AccuracyReport accuracy = accuracy_report(load_judgments_csv(read_file(judgments_path)),
                                              {services.begin(), services.end()}, reference);
    json["accuracy"] = to_json(accuracy);
    markdown += "\n" + to_markdown(accuracy);
    out << "\n" << to_markdown(accuracy);
  }
  if (!report_path.empty()) write_file(report_path, json.dump(2) + "\n");
  if (!markdown_path.empty()) write_file(markdown_path, markdown);
  return kExitOk;
}

int cmd_validate(const std::string& input, std::ostream& out) {
  ApiSpecification spec = load_spec_file(input);
  std::vector<Diagnostic> diagnostics = validate_document(spec.raw_document);
  for (const auto& d : diagnostics) out << d.code << " " << (d.pointer.empty() ? "/" : d.pointer) << ": " << d.message << "\n";
  return diagnostics.empty() ? kExitOk : kExitFindings;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Extracts rules from OpenAPI parameter descriptions with a language model and merges them into the "
               "specification.",
               "restgpt"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML-style configuration file; command-line flags take precedence");

  RunConfig cfg;
  app.add_option("--backend", cfg.backend, "Completion source")
      ->check(CLI::IsMember({"live", "replay", "scripted"}))
      ->capture_default_str();
  app.add_option("--model", cfg.model, "Model name sent with every request")->capture_default_str();
  app.add_option("--temperature", cfg.temperature, "Sampling temperature")
      ->check(CLI::Range(0.0, 2.0))
      ->capture_default_str();
  app.add_option("--max-tokens", cfg.max_tokens, "Output token cap per completion")->capture_default_str();
  app.add_option("--cache", cfg.cache, "Replay cache file (JSONL)");
  app.add_option("--templates", cfg.templates, "Prompt template directory");
  app.add_option("--concurrency", cfg.concurrency, "Maximum requests in flight")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "Seed for retry jitter")->capture_default_str();
  app.add_option("--format", cfg.format, "Output format (yaml or json); defaults to the input format")
      ->check(CLI::IsMember({"yaml", "json"}));
  app.add_option("--base-url", cfg.base_url, "Chat completion endpoint origin")->capture_default_str();
  app.add_option("--script", cfg.script, "Response script (JSON) for the scripted backend");
  app.add_option("--service", cfg.service, "Service name used in rule identities (defaults to info.title)");
  app.add_option("--shots", cfg.shots, "Few-shot examples per prompt")->capture_default_str();
  app.add_flag("--lenient", cfg.lenient, "Replay cache misses yield \"None\" instead of an error");
  app.add_flag("--allow-conflicts", cfg.allow_conflicts, "Exit 0 even when rules conflict with the specification");

  std::string spec_path;
  std::string output;
  auto* enhance = app.add_subcommand("enhance", "Extract rules and write the enhanced specification");
  enhance->add_option("spec", spec_path, "OpenAPI document (YAML or JSON)")->required();
  enhance->add_option("-o,--output", output, "Enhanced specification path");

  auto* record = app.add_subcommand("record", "Populate the replay cache from the live (or scripted) backend");
  record->add_option("spec", spec_path, "OpenAPI document (YAML or JSON)")->required();

  std::string log_path;
  std::string truth_path;
  std::string report_path;
  std::string markdown_path;
  std::string judgments_path;
  std::optional<double> reference;
  auto* evaluate = app.add_subcommand("evaluate", "Score an extraction log against ground truth");
  evaluate->add_option("log", log_path, "Extraction log (JSONL)")->required();
  evaluate->add_option("truth", truth_path, "Ground truth (JSONL)")->required();
  evaluate->add_option("--report", report_path, "Write the JSON report here");
  evaluate->add_option("--markdown", markdown_path, "Write the Markdown tables here");
  evaluate->add_option("--judgments", judgments_path, "Value judgments (CSV) for the accuracy report");
  evaluate->add_option("--reference-average", reference, "Reference average accuracy to compare against");

  auto* validate = app.add_subcommand("validate", "Check keyword compatibility in a specification");
  validate->add_option("spec", spec_path, "OpenAPI document (YAML or JSON)")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
  }

  try {
    if (enhance->parsed()) return cmd_enhance(cfg, spec_path, output, out, err);
    if (record->parsed()) return cmd_record(cfg, spec_path, out, err);
    if (evaluate->parsed()) {
      return cmd_evaluate(log_path, truth_path, report_path, markdown_path, judgments_path, reference, out);
    }
    if (validate->parsed()) return cmd_validate(spec_path, out);
  } catch (const ParseError& e) {
    err << "restgpt: parse error at line " << e.line() << ", column " << e.column() << ": " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "restgpt: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace restgpt
