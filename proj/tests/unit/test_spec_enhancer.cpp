#include <doctest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "restgpt/spec_enhancer.hpp"

using namespace restgpt;
using restgpt::testsupport::fixture;
using restgpt::testsupport::slurp;

namespace {

const PromptTemplateSet& templates() {
  static const PromptTemplateSet t = PromptTemplateSet::load_default();
  return t;
}

ApiSpecification load(const std::string& name) { return load_spec_file(fixture(name).string()); }

ParameterDescriptor descriptor(const ApiSpecification& spec, const std::string& name) {
  for (const auto& d : extract_descriptors(spec)) {
    if (d.name() == name) return d;
  }
  throw std::runtime_error("no descriptor " + name);
}

std::vector<ExtractedRule> scripted_rules(const ApiSpecification& spec, const std::string& script) {
  auto backend = ScriptedBackend::from_script(Json::parse(slurp(fixture(script))));
  return extract_all(spec, *backend, templates()).rules;
}

ExtractedRule examples(const ParameterDescriptor& d, std::vector<Value> values, bool exhaustive) {
  return {Examples{std::move(values), exhaustive, d.identity}, {}};
}
ExtractedRule bounds(const ParameterDescriptor& d, std::optional<double> lo, std::optional<double> hi,
                     std::optional<Value> def = std::nullopt) {
  return {ParameterConstraint{lo, hi, std::move(def), d.identity}, {}};
}
ExtractedRule type_format(const ParameterDescriptor& d, std::optional<std::string> type,
                          std::optional<std::string> items = std::nullopt,
                          std::optional<std::string> collection = std::nullopt,
                          std::optional<std::string> format = std::nullopt) {
  return {TypeFormat{std::move(type), std::move(items), std::move(format), std::move(collection), d.identity}, {}};
}
ExtractedRule operational(const ParameterDescriptor& d, const std::string& text) {
  return {OperationalConstraint{dsl::parse_constraint(text), d.identity.operation()}, {}};
}

const Json& at(const Json& doc, const std::string& pointer) { return doc.at(Json::json_pointer(pointer)); }

std::string resolved_pointer(const Json& doc, std::string pointer) {
  for (int i = 0; i < 8; ++i) {
    const Json& node = at(doc, pointer);
    if (!node.is_object() || !node.contains("$ref")) break;
    pointer = node["$ref"].get<std::string>().substr(1);
  }
  return pointer;
}

// Object keywords such as `items` may gain members; nothing present changes.
bool preserves(const Json& before, const Json& after) {
  if (before.is_object() && after.is_object()) {
    for (const auto& [key, value] : before.items()) {
      if (!after.contains(key) || !preserves(value, after[key])) return false;
    }
    return true;
  }
  return same_tree(before, after);
}

// Every keyword the input declares keeps its value.
void check_conservative(const ApiSpecification& input, const EnhancedSpec& out) {
  ApiSpecification after = out.enhanced();
  for (const auto& before : extract_descriptors(input)) {
    const ParameterDescriptor* now = after.find_descriptor(before.identity);
    REQUIRE(now != nullptr);
    for (const auto& [key, value] : before.machine_keywords.items()) {
      CAPTURE(to_string(before.identity));
      CAPTURE(key);
      REQUIRE(now->machine_keywords.contains(key));
      CHECK(preserves(value, now->machine_keywords[key]));
    }
    CHECK(now->description == before.description);
  }
}

void check_accounting(const std::vector<ExtractedRule>& rules, const EnhancedSpec& out) {
  CHECK(rules.size() == out.applied.size() + out.conflicts.size() + out.duplicates.size());
  for (const auto& a : out.applied) CHECK_FALSE(a.placement.keyword_paths.empty());
}

std::size_t count_code(const std::vector<Diagnostic>& diags, const std::string& code) {
  return static_cast<std::size_t>(
      std::count_if(diags.begin(), diags.end(), [&](const Diagnostic& d) { return d.code == code; }));
}

}  // namespace

TEST_CASE("closed value set becomes an enum") {
  ApiSpecification spec = load("fdic_fig1.yaml");
  ParameterDescriptor sort_order = descriptor(spec, "sort_order");
  EnhancedSpec out = enhance(spec, {examples(sort_order, {std::string("ASC"), std::string("DESC")}, true)});
  REQUIRE(out.applied.size() == 1);
  CHECK(at(out.document, sort_order.schema_pointer)["enum"] == Json::parse(R"(["ASC","DESC"])"));
  CHECK(out.applied[0].placement.keyword_paths == std::vector<std::string>{sort_order.schema_pointer + "/enum"});
  CHECK(out.applied[0].placement.node_pointer == sort_order.node_pointer);
  CHECK(validate_enhanced(out).empty());
}

TEST_CASE("open value set becomes example and x-example-values") {
  ApiSpecification spec = load("fdic_fig1.yaml");
  ParameterDescriptor filters = descriptor(spec, "filters");
  EnhancedSpec out = enhance(
      spec, {examples(filters, {std::string("STNAME:\"California\""), std::string("STNAME:\"Ohio\"")}, false),
             examples(filters, {std::string("STNAME:\"Ohio\""), std::string("STNAME:\"Texas\"")}, false)});
  CHECK(out.applied.size() == 2);
  const Json& node = at(out.document, filters.node_pointer);
  CHECK(node["example"] == "STNAME:\"California\"");
  CHECK(node["x-example-values"] ==
        Json::parse(R"(["STNAME:\"California\"", "STNAME:\"Ohio\"", "STNAME:\"Texas\""])"));
  CHECK_FALSE(node.contains("enum"));
}

TEST_CASE("a declared type is never replaced") {
  ApiSpecification spec = load("fdic_fig1.yaml");
  ParameterDescriptor sort_order = descriptor(spec, "sort_order");
  EnhancedSpec out = enhance(spec, {type_format(sort_order, "number")});
  CHECK(out.applied.empty());
  REQUIRE(out.conflicts.size() == 1);
  CHECK(out.conflicts[0].keyword_path == sort_order.schema_pointer + "/type");
  CHECK(out.conflicts[0].existing_value == "string");
  CHECK(at(out.document, sort_order.schema_pointer)["type"] == "string");
  CHECK(out.document == spec.raw_document);

  Json report = conflict_report(out);
  REQUIRE(report["conflicts"].size() == 1);
  CHECK(report["conflicts"][0]["existing_keyword"]["path"] == sort_order.schema_pointer + "/type");
  CHECK(report["conflicts"][0]["existing_keyword"]["value"] == "string");
  CHECK_FALSE(report["conflicts"][0]["reason"].get<std::string>().empty());
}

TEST_CASE("matching values are duplicates") {
  ApiSpecification spec = load("omdb_v2.yaml");
  ParameterDescriptor type = descriptor(spec, "type");
  ParameterDescriptor page = descriptor(spec, "page");
  EnhancedSpec out = enhance(spec, {examples(type, {std::string("series"), std::string("movie"), std::string("episode")}, true),
                                    type_format(type, "string"), bounds(page, 1, std::nullopt)});
  CHECK(out.applied.empty());
  CHECK(out.conflicts.empty());
  CHECK(out.duplicates.size() == 3);
  CHECK(out.document == spec.raw_document);
}

TEST_CASE("rules are applied atomically") {
  ApiSpecification spec = load("omdb_v2.yaml");
  ParameterDescriptor page = descriptor(spec, "page");
  ParameterDescriptor plot = descriptor(spec, "plot");

  EnhancedSpec clash = enhance(spec, {bounds(page, 2, 100)});
  CHECK(clash.conflicts.size() == 1);
  CHECK_FALSE(at(clash.document, page.schema_pointer).contains("maximum"));

  EnhancedSpec range = enhance(spec, {bounds(page, 1, 100, Value{500.0})});
  REQUIRE(range.conflicts.size() == 1);
  CHECK(range.conflicts[0].reason == "default-out-of-range");
  CHECK(range.document == spec.raw_document);

  EnhancedSpec ok = enhance(spec, {bounds(page, 1, 100, Value{std::string("3")})});
  REQUIRE(ok.applied.size() == 1);
  CHECK(at(ok.document, page.schema_pointer)["maximum"] == 100);
  CHECK(at(ok.document, page.schema_pointer)["default"] == 3);

  EnhancedSpec not_in_enum = enhance(spec, {examples(plot, {std::string("medium")}, false)});
  CHECK(not_in_enum.conflicts.size() == 1);
  EnhancedSpec wider = enhance(spec, {examples(plot, {std::string("short"), std::string("full"), std::string("medium")}, true)});
  CHECK(wider.conflicts.size() == 1);
  CHECK(at(wider.document, plot.schema_pointer)["enum"] == Json::parse(R"(["short","full"])"));
}

TEST_CASE("bounds require a numeric type") {
  ApiSpecification spec = load("fdic_fig1.yaml");
  EnhancedSpec out = enhance(spec, {bounds(descriptor(spec, "filters"), 0, 10)});
  CHECK(out.conflicts.size() == 1);
  CHECK(out.applied.empty());
}

TEST_CASE("collection format placement differs by version") {
  ApiSpecification v2 = load("omdb_v2.yaml");
  ParameterDescriptor fields = descriptor(v2, "fields");
  EnhancedSpec out2 = enhance(v2, {type_format(fields, std::nullopt, std::nullopt, "csv")});
  REQUIRE(out2.applied.size() == 1);
  CHECK(at(out2.document, fields.node_pointer)["collectionFormat"] == "csv");
  CHECK(validate_enhanced(out2).empty());

  EnhancedSpec string2 = enhance(v2, {type_format(descriptor(v2, "t"), std::nullopt, std::nullopt, "csv")});
  REQUIRE(string2.conflicts.size() == 1);
  CHECK(string2.conflicts[0].reason == "collection-format-requires-array");

  ApiSpecification v3 = load("spotify_v3.json");
  ParameterDescriptor market = descriptor(v3, "market");
  EnhancedSpec string3 = enhance(v3, {type_format(market, std::nullopt, std::nullopt, "csv")});
  REQUIRE(string3.conflicts.size() == 1);
  CHECK(string3.conflicts[0].reason == "style-requires-array-or-object");
  CHECK(validate_enhanced(string3).empty());
}

TEST_CASE("operational constraints land in x-dependencies") {
  ApiSpecification spec = load("omdb_v2.yaml");
  ParameterDescriptor i = descriptor(spec, "i");
  EnhancedSpec out = enhance(spec, {operational(i, "Or(t, i)"), operational(i, "Or(i, t)"),
                                    operational(i, "y >= 1888 AND y <= 2030")});
  CHECK(out.applied.size() == 2);
  CHECK(out.duplicates.size() == 1);
  const Json& deps = at(out.document, "/paths/~1/get")["x-dependencies"];
  REQUIRE(deps.size() == 2);
  CHECK(deps[0] == dsl::print(dsl::canonicalize(dsl::parse_constraint("Or(t, i)"))));
  CHECK(validate_enhanced(out).empty());
  CHECK(out.enhanced().find_operation("/", HttpMethod::get)->dependencies.size() == 2);

  EnhancedSpec unbound = enhance(spec, {operational(i, "Or(i, imdb_id)")});
  CHECK(unbound.conflicts.size() == 1);
}

TEST_CASE("rules outside the document are rejected") {
  ApiSpecification spec = load("omdb_v2.yaml");
  ParameterDescriptor ghost = descriptor(spec, "i");
  ghost.identity.name = "nope";
  CHECK_THROWS_AS(enhance(spec, {bounds(ghost, 1, 2)}), UnknownTargetError);
  ParameterDescriptor elsewhere = descriptor(spec, "i");
  elsewhere.identity.path = "/missing";
  CHECK_THROWS_AS(enhance(spec, {operational(elsewhere, "Or(i, t)")}), UnknownTargetError);
  elsewhere = descriptor(spec, "i");
  elsewhere.identity.service = "Another";
  CHECK_THROWS_AS(enhance(spec, {operational(elsewhere, "Or(i, t)")}), UnknownTargetError);
}

TEST_CASE("no rules leaves the document unchanged") {
  for (const char* name : {"fdic_fig1.yaml", "omdb_v2.yaml", "spotify_v3.json", "languagetool_v3.yaml", "no_descriptions.yaml"}) {
    CAPTURE(std::string(name));
    ApiSpecification spec = load(name);
    EnhancedSpec out = enhance(spec, {});
    CHECK(out.document == spec.raw_document);
    CHECK(semantically_equal(out.enhanced(), spec));
    CHECK(out.serialize() == serialize_spec(spec, spec.source_format));
  }
}

TEST_CASE("scripted corpus runs are conservative, accounted, and idempotent") {
  const std::vector<std::pair<std::string, std::string>> corpus{
      {"fdic_fig1.yaml", "fdic_fig1.script.json"},
      {"omdb_v2.yaml", "omdb_v2.script.json"},
      {"spotify_v3.json", "spotify_v3.script.json"},
      {"languagetool_v3.yaml", "languagetool_v3.script.json"}};
  for (const auto& [spec_name, script_name] : corpus) {
    CAPTURE(spec_name);
    ApiSpecification spec = load(spec_name);
    auto rules = scripted_rules(spec, script_name);
    REQUIRE_FALSE(rules.empty());
    EnhancedSpec out = enhance(spec, rules);
    check_conservative(spec, out);
    check_accounting(rules, out);
    CHECK(validate_enhanced(out).empty());

    EnhancedSpec again = enhance(out.enhanced(), rules);
    CHECK(again.applied.empty());
    CHECK(again.document == out.document);
    CHECK(enhance(out.enhanced(), {}).document == out.document);
  }
}

TEST_CASE("omdb script yields the expected conflicts") {
  ApiSpecification spec = load("omdb_v2.yaml");
  EnhancedSpec out = enhance(spec, scripted_rules(spec, "omdb_v2.script.json"));
  std::set<std::string> blocked;
  for (const auto& c : out.conflicts) blocked.insert(c.rule.target() ? c.rule.target()->name : "op");
  CHECK(blocked == std::set<std::string>{"plot", "type"});
  CHECK(at(out.document, descriptor(spec, "y").schema_pointer)["minimum"] == 1888);
  CHECK(at(out.document, descriptor(spec, "fields").node_pointer)["collectionFormat"] == "csv");
}

TEST_CASE("shared parameter definitions are enhanced once") {
  ApiSpecification spec = load("omdb_v2.yaml");
  ParameterDescriptor s = descriptor(spec, "s");
  EnhancedSpec out = enhance(spec, {examples(s, {std::string("Alien")}, false)});
  REQUIRE(out.applied.size() == 1);
  std::string node = resolved_pointer(out.document, s.node_pointer);
  CHECK(at(out.document, node)["example"] == "Alien");
}

TEST_CASE("random rules keep the invariants") {
  std::mt19937_64 rng(2024);
  const std::vector<std::string> specs{"fdic_fig1.yaml", "omdb_v2.yaml", "spotify_v3.json", "languagetool_v3.yaml"};
  const std::vector<std::string> types{"string", "integer", "number", "boolean", "array"};
  const std::vector<std::string> words{"a", "b", "ASC", "1", "2.5", "true"};
  for (int round = 0; round < 60; ++round) {
    ApiSpecification spec = load(specs[static_cast<std::size_t>(round) % specs.size()]);
    auto ds = extract_descriptors(spec);
    std::vector<ExtractedRule> rules;
    for (int k = 0; k < 12; ++k) {
      const auto& d = ds[rng() % ds.size()];
      switch (rng() % 4) {
        case 0: {
          double lo = static_cast<double>(rng() % 50);
          rules.push_back(bounds(d, rng() % 2 ? std::optional<double>(lo) : std::nullopt,
                                 rng() % 2 ? std::optional<double>(lo + static_cast<double>(rng() % 50)) : std::nullopt,
                                 rng() % 3 == 0 ? std::optional<Value>(Value{lo + 1}) : std::nullopt));
          break;
        }
        case 1:
          rules.push_back(type_format(d, types[rng() % types.size()],
                                      rng() % 3 == 0 ? std::optional<std::string>("string") : std::nullopt,
                                      rng() % 3 == 0 ? std::optional<std::string>("csv") : std::nullopt));
          break;
        case 2: {
          std::vector<Value> values;
          for (std::size_t n = 1 + rng() % 3; n > 0; --n) values.push_back(std::string(words[rng() % words.size()]));
          rules.push_back(examples(d, values, rng() % 2 == 0));
          break;
        }
        default: {
          std::vector<std::string> names;
          for (const auto& o : ds) {
            if (o.identity.operation() == d.identity.operation()) names.push_back(o.name());
          }
          std::string a = names[rng() % names.size()], b = names[rng() % names.size()];
          rules.push_back(operational(d, rng() % 2 ? "Requires(" + a + ", " + b + ")" : "OnlyOne(" + a + ", " + b + ")"));
        }
      }
    }
    EnhancedSpec out = enhance(spec, rules);
    check_conservative(spec, out);
    check_accounting(rules, out);
    CHECK(validate_enhanced(out).size() == validate_document(spec.raw_document).size());
  }
}

TEST_CASE("validator fixtures") {
  auto style = validate_document(load("validator_style_on_string.yaml").raw_document);
  REQUIRE(style.size() == 1);
  CHECK(style[0].code == "style-requires-array-or-object");
  CHECK(style[0].pointer.ends_with("/style"));

  auto range = validate_document(load("validator_min_gt_max.yaml").raw_document);
  REQUIRE(range.size() == 1);
  CHECK(range[0].code == "minimum-exceeds-maximum");

  auto in_enum = validate_document(load("validator_default_outside_enum.yaml").raw_document);
  REQUIRE(in_enum.size() == 1);
  CHECK(in_enum[0].code == "default-not-in-enum");

  for (const char* clean : {"fdic_fig1.yaml", "omdb_v2.yaml", "spotify_v3.json", "languagetool_v3.yaml"}) {
    CHECK(validate_document(load(clean).raw_document).empty());
  }
}

TEST_CASE("validator covers the remaining checks") {
  Json doc = Json::parse(R"J({
    "swagger": "2.0", "info": {"title": "t", "version": "1"},
    "paths": {"/x": {"get": {
      "parameters": [
        {"name": "a", "in": "query", "type": "string", "collectionFormat": "csv"},
        {"name": "b", "in": "query", "type": "integer", "minimum": 1, "maximum": 5, "default": 9},
        {"name": "example", "in": "query", "type": "string", "example": {"style": "x", "minimum": 9, "maximum": 1}}
      ],
      "x-dependencies": ["a AND (", 5, "Requires(a, b)"],
      "responses": {"200": {"description": "OK"}}}}}})J");
  auto diags = validate_document(doc);
  CHECK(count_code(diags, "collection-format-requires-array") == 1);
  CHECK(count_code(diags, "default-out-of-range") == 1);
  CHECK(count_code(diags, "dependency-unparseable") == 2);
  CHECK(diags.size() == 4);
  for (const auto& d : diags) CHECK(to_json(d)["code"] == d.code);
}

TEST_CASE("serialization mirrors the input format") {
  ApiSpecification spec = load("spotify_v3.json");
  EnhancedSpec out = enhance(spec, scripted_rules(spec, "spotify_v3.script.json"));
  std::string json = out.serialize();
  CHECK(Json::parse(json) == out.document);
  std::string yaml = out.serialize(SourceFormat::yaml);
  CHECK(parse_yaml(yaml) == out.document);
}
