#include <doctest.h>

#include <filesystem>

#include "fixtures.hpp"
#include "restgpt/prompt_builder.hpp"

using namespace restgpt;
using restgpt::testsupport::fixture;

namespace {

const PromptTemplateSet& templates() {
  static const PromptTemplateSet t = PromptTemplateSet::load_default();
  return t;
}

ParameterDescriptor fdic(const std::string& name) {
  static const ApiSpecification spec = load_spec_file(fixture("fdic_fig1.yaml").string());
  for (const auto& d : extract_descriptors(spec)) {
    if (d.name() == name) return d;
  }
  throw std::runtime_error("no descriptor " + name);
}

std::string all_text(const std::vector<ChatMessage>& messages) {
  std::string s;
  for (const auto& m : messages) s += m.content + "\n";
  return s;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

const char* kValidTemplate =
    "# comment\n[GUIDELINES]\nBe careful.\n[CASES]\nCase 1: a\nCase 2: b\nCase 3: c\nCase 4: d\nCase 5: e\n"
    "Case 6: f\nCase 7: g\nCase 8: h\nCase 9: i\nCase 10: j\n[GRAMMAR]\nops\n[OUTPUT]\nkey [value]\n";

}  // namespace

TEST_CASE("shipped templates cover every rule kind") {
  for (RuleKind kind : kAllRuleKinds) {
    CAPTURE(to_string(kind));
    REQUIRE(templates().has(kind));
    const PromptTemplate& t = templates().get(kind);
    CHECK(t.cases.size() == 10);
    CHECK(t.cases.front().starts_with("Case 1:"));
    CHECK(t.cases.front().find("Output \"None\"") != std::string::npos);
    CHECK(t.cases.back().starts_with("Case 10:"));
    CHECK(t.guidelines.find("Interpret the description in the least constraining way") != std::string::npos);
    CHECK(t.few_shot_pool.size() >= 2);
  }
  const std::string& grammar = templates().get(RuleKind::operational).grammar;
  for (const char* op : {"AllOrNone", "ZeroOrOne", "OnlyOne", "Or", "Requires", "<=", "!="}) {
    CHECK(grammar.find(op) != std::string::npos);
  }
}

TEST_CASE("bundle layout and output key schema per kind") {
  PromptBundle examples = build_prompt(fdic("sort_order"), RuleKind::examples, templates());
  REQUIRE(examples.sections.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(examples.sections[i].first == kSectionNames[i]);
  CHECK(examples.few_shot.size() == 2);
  CHECK(examples.sections[3].second.find("min [minimum]") == std::string::npos);
  CHECK(examples.sections[3].second.find("example [value]") != std::string::npos);

  PromptBundle bounds = build_prompt(fdic("sort_order"), RuleKind::parameter_constraint, templates());
  CHECK(bounds.sections[3].second.find("min [minimum], max [maximum], default [default]") != std::string::npos);

  PromptBundle types = build_prompt(fdic("sort_order"), RuleKind::type_format, templates());
  CHECK(types.sections[3].second.find("collectionFormat [collectionFormat]") != std::string::npos);
}

TEST_CASE("subject embeds the name, keywords, and verbatim description") {
  PromptBundle b = build_prompt(fdic("filters"), RuleKind::examples, templates());
  CHECK(b.subject.find("Parameter: filters") != std::string::npos);
  CHECK(b.subject.find("STNAME:\"West Virginia\"") != std::string::npos);
  CHECK(b.subject.find("STNAME:(\"West Virginia\",\"Delaware\")") != std::string::npos);
  CHECK(b.subject.find(R"({"type":"string"})") != std::string::npos);
  CHECK(all_text(render_messages(b)).find("STNAME:\"West Virginia\"") != std::string::npos);
}

TEST_CASE("empty descriptions are marked") {
  ParameterDescriptor d = fdic("sort_order");
  d.description.reset();
  PromptBundle b = build_prompt(d, RuleKind::operational, templates());
  CHECK(b.subject.find("Description: <empty>") != std::string::npos);
  d.description = "";
  CHECK(build_prompt(d, RuleKind::examples, templates()).subject.find("Description: <empty>") != std::string::npos);
}

TEST_CASE("operational prompts list the operation's parameters") {
  PromptOptions o;
  o.sibling_parameters = {"filters", "sort_order"};
  PromptBundle b = build_prompt(fdic("filters"), RuleKind::operational, templates(), o);
  CHECK(b.subject.find("Operation parameters: filters, sort_order") != std::string::npos);
  PromptBundle e = build_prompt(fdic("filters"), RuleKind::examples, templates(), o);
  CHECK(e.subject.find("Operation parameters") == std::string::npos);
}

TEST_CASE("message rendering") {
  PromptOptions none;
  none.k_shots = 0;
  auto m0 = render_messages(build_prompt(fdic("sort_order"), RuleKind::examples, templates(), none));
  REQUIRE(m0.size() == 2);
  CHECK(m0[0].role == Role::system);
  CHECK(m0[1].role == Role::user);

  auto m2 = render_messages(build_prompt(fdic("sort_order"), RuleKind::examples, templates()));
  REQUIRE(m2.size() == 6);
  CHECK(m2[1].role == Role::user);
  CHECK(m2[2].role == Role::assistant);
  CHECK(m2[5].content == build_prompt(fdic("sort_order"), RuleKind::examples, templates()).subject);

  auto again = render_messages(build_prompt(fdic("sort_order"), RuleKind::examples, templates()));
  CHECK(again == m2);

  for (const char* header : {"### Guidelines", "### Cases", "### Grammar Highlights", "### Output Configurations"}) {
    CHECK(count(all_text(m2), header) == 1);
  }
}

TEST_CASE("token budget drops few-shot examples, never the subject") {
  ParameterDescriptor d = fdic("filters");
  PromptOptions o;
  o.k_shots = 3;
  std::size_t full = estimate_tokens(render_messages(build_prompt(d, RuleKind::examples, templates(), o)));
  o.k_shots = 0;
  std::size_t bare = estimate_tokens(render_messages(build_prompt(d, RuleKind::examples, templates(), o)));
  REQUIRE(bare < full);

  o.k_shots = 3;
  o.token_budget = bare + (full - bare) / 2;
  PromptBundle trimmed = build_prompt(d, RuleKind::examples, templates(), o);
  CHECK(trimmed.few_shot.size() < 3);
  CHECK(estimate_tokens(render_messages(trimmed)) <= o.token_budget);
  CHECK(trimmed.subject.find("STNAME:(\"West Virginia\",\"Delaware\")") != std::string::npos);

  o.token_budget = bare;
  CHECK(build_prompt(d, RuleKind::examples, templates(), o).few_shot.empty());
  o.token_budget = bare - 1;
  CHECK_THROWS_AS(build_prompt(d, RuleKind::examples, templates(), o), ConfigError);
}

TEST_CASE("token estimate") {
  CHECK(estimate_tokens("") == 0);
  CHECK(estimate_tokens("abc") == 1);
  CHECK(estimate_tokens("abcd") == 1);
  CHECK(estimate_tokens("abcde") == 2);
}

TEST_CASE("template parsing and configuration errors") {
  PromptTemplate t = PromptTemplateSet::parse_template(kValidTemplate);
  CHECK(t.guidelines == "Be careful.");
  CHECK(t.cases.size() == 10);
  CHECK(t.output_configuration == "key [value]");

  std::string nine = kValidTemplate;
  nine.replace(nine.find("Case 10: j\n"), 11, "");
  CHECK_THROWS_AS(PromptTemplateSet::parse_template(nine), ConfigError);
  std::string no_grammar = kValidTemplate;
  no_grammar.replace(no_grammar.find("[GRAMMAR]\nops\n"), 14, "");
  CHECK_THROWS_AS(PromptTemplateSet::parse_template(no_grammar), ConfigError);

  PromptTemplateSet empty;
  CHECK_THROWS_AS(build_prompt(fdic("filters"), RuleKind::examples, empty), ConfigError);

  PromptTemplateSet set;
  set.set(RuleKind::examples, t);
  CHECK_THROWS_AS(set.add_few_shot_line("{not json", "pool", 3), ConfigError);
  CHECK_THROWS_AS(set.add_few_shot_line(R"({"rule_kind":"bogus","input":"a","output":"b"})", "pool", 4), ConfigError);
  set.add_few_shot_line(R"({"rule_kind":"examples","input":"a","output":"b"})", "pool", 5);
  CHECK(set.get(RuleKind::examples).few_shot_pool.size() == 1);
  try {
    set.add_few_shot_line("{not json", "pool", 7);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("7") != std::string::npos);
  }

  CHECK_THROWS_AS(PromptTemplateSet::load((std::filesystem::temp_directory_path() / "restgpt-no-such-dir").string()),
                  ConfigError);
}

TEST_CASE("rule kind names") {
  for (RuleKind k : kAllRuleKinds) CHECK(rule_kind_from_string(to_string(k)) == k);
  CHECK_FALSE(rule_kind_from_string("constraints").has_value());
}
