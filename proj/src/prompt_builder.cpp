#include "restgpt/prompt_builder.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace restgpt {
namespace {

constexpr std::array<std::pair<std::string_view, RuleKind>, 4> kKinds{{
    {"operational", RuleKind::operational},
    {"parameter_constraint", RuleKind::parameter_constraint},
    {"type_format", RuleKind::type_format},
    {"examples", RuleKind::examples},
}};

constexpr std::array<std::string_view, 4> kMarkers{"[GUIDELINES]", "[CASES]", "[GRAMMAR]", "[OUTPUT]"};
constexpr std::array<std::string_view, 4> kHeaders{"### Guidelines", "### Cases", "### Grammar Highlights",
                                                   "### Output Configurations"};
constexpr std::size_t kCaseCount = 10;

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read template file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// "Case 7: ..." → 7, anything else → 0.
std::size_t case_number(std::string_view line) {
  if (!line.starts_with("Case ")) return 0;
  std::size_t i = 5;
  std::size_t n = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) n = n * 10 + (line[i++] - '0');
  if (i == 5 || i >= line.size() || line[i] != ':') return 0;
  return n;
}

std::vector<std::string> split_cases(const std::string& body, std::string_view origin) {
  std::vector<std::string> cases;
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    std::size_t n = case_number(line);
    if (n != 0) {
      if (n != cases.size() + 1) {
        throw ConfigError(std::string(origin) + ": expected Case " + std::to_string(cases.size() + 1) + ", found Case " +
                          std::to_string(n));
      }
      cases.push_back(trim(line));
    } else if (!trim(line).empty()) {
      if (cases.empty()) throw ConfigError(std::string(origin) + ": text before Case 1 in [CASES]");
      cases.back() += "\n" + trim(line);
    }
  }
  if (cases.size() != kCaseCount) {
    throw ConfigError(std::string(origin) + ": [CASES] must list exactly 10 cases, found " +
                      std::to_string(cases.size()));
  }
  return cases;
}

}  // namespace

std::string_view to_string(RuleKind kind) {
  for (const auto& [name, k] : kKinds) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<RuleKind> rule_kind_from_string(std::string_view s) {
  for (const auto& [name, k] : kKinds) {
    if (name == s) return k;
  }
  return std::nullopt;
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

PromptTemplate PromptTemplateSet::parse_template(std::string_view text, std::string_view origin) {
  std::array<std::optional<std::string>, 4> bodies;
  int current = -1;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    auto marker = std::find(kMarkers.begin(), kMarkers.end(), t);
    if (marker != kMarkers.end()) {
      current = static_cast<int>(marker - kMarkers.begin());
      if (bodies[current]) throw ConfigError(std::string(origin) + ": duplicate section " + t);
      bodies[current] = "";
      continue;
    }
    if (current < 0) {
      if (!t.empty() && !t.starts_with("#")) {
        throw ConfigError(std::string(origin) + ": text before the first section marker");
      }
      continue;
    }
    *bodies[current] += line;
    *bodies[current] += '\n';
  }
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    if (!bodies[i] || trim(*bodies[i]).empty()) {
      throw ConfigError(std::string(origin) + ": missing or empty section " + std::string(kMarkers[i]));
    }
  }
  PromptTemplate t;
  t.guidelines = trim(*bodies[0]);
  t.cases = split_cases(*bodies[1], origin);
  t.grammar = trim(*bodies[2]);
  t.output_configuration = trim(*bodies[3]);
  return t;
}

void PromptTemplateSet::set(RuleKind kind, PromptTemplate t) { templates_[kind] = std::move(t); }

const PromptTemplate& PromptTemplateSet::get(RuleKind kind) const {
  auto it = templates_.find(kind);
  if (it == templates_.end()) throw ConfigError("no prompt template for rule kind '" + std::string(to_string(kind)) + "'");
  return it->second;
}

void PromptTemplateSet::add_few_shot_line(std::string_view line, std::string_view origin, std::size_t line_number) {
  const std::string where = std::string(origin) + ":" + std::to_string(line_number);
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw ConfigError(where + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("rule_kind") || !j.contains("input") || !j.contains("output") ||
      !j["rule_kind"].is_string() || !j["input"].is_string() || !j["output"].is_string()) {
    throw ConfigError(where + ": few-shot lines need string fields rule_kind, input, output");
  }
  auto kind = rule_kind_from_string(j["rule_kind"].get<std::string>());
  if (!kind) throw ConfigError(where + ": unknown rule_kind '" + j["rule_kind"].get<std::string>() + "'");
  auto it = templates_.find(*kind);
  if (it == templates_.end()) throw ConfigError(where + ": few-shot example for a kind without a template");
  it->second.few_shot_pool.push_back({j["input"].get<std::string>(), j["output"].get<std::string>()});
}

PromptTemplateSet PromptTemplateSet::load(const std::string& dir) {
  PromptTemplateSet set;
  for (RuleKind kind : kAllRuleKinds) {
    std::string path = dir + "/" + std::string(to_string(kind)) + ".txt";
    set.set(kind, parse_template(read_file(path), path));
  }
  std::string pool_path = dir + "/few_shot.jsonl";
  std::ifstream pool(pool_path);
  if (pool) {
    std::string line;
    std::size_t n = 0;
    while (std::getline(pool, line)) {
      ++n;
      if (trim(line).empty()) continue;
      set.add_few_shot_line(line, pool_path, n);
    }
  }
  return set;
}

PromptTemplateSet PromptTemplateSet::load_default() { return load(RESTGPT_DEFAULT_TEMPLATE_DIR); }

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::size_t estimate_tokens(const std::vector<ChatMessage>& messages) {
  std::size_t chars = 0;
  for (const auto& m : messages) chars += m.content.size();
  return (chars + 3) / 4;
}

std::string render_subject(const ParameterDescriptor& d, RuleKind kind, const std::vector<std::string>& siblings) {
  std::string out;
  out += "Parameter: " + d.name() + "\n";
  out += "Location: " + std::string(to_string(d.location())) + "\n";
  out += std::string("Required: ") + (d.required ? "true" : "false") + "\n";
  out += "Type information: " + d.machine_keywords.dump() + "\n";
  if (kind == RuleKind::operational && !siblings.empty()) {
    out += "Operation parameters: ";
    for (std::size_t i = 0; i < siblings.size(); ++i) {
      if (i) out += ", ";
      out += siblings[i];
    }
    out += "\n";
  }
  out += "Description: ";
  out += d.has_description() && !d.description->empty() ? *d.description : std::string("<empty>");
  return out;
}

PromptBundle build_prompt(const ParameterDescriptor& descriptor, RuleKind kind, const PromptTemplateSet& templates,
                          const PromptOptions& options) {
  const PromptTemplate& t = templates.get(kind);
  PromptBundle bundle;
  bundle.rule_kind = kind;

  std::string cases;
  for (const auto& c : t.cases) {
    if (!cases.empty()) cases += '\n';
    cases += c;
  }
  bundle.sections = {{std::string(kSectionNames[0]), t.guidelines},
                     {std::string(kSectionNames[1]), cases},
                     {std::string(kSectionNames[2]), t.grammar},
                     {std::string(kSectionNames[3]), t.output_configuration}};
  bundle.subject = render_subject(descriptor, kind, options.sibling_parameters);

  std::size_t k = std::min(options.k_shots, t.few_shot_pool.size());
  bundle.few_shot.assign(t.few_shot_pool.begin(), t.few_shot_pool.begin() + static_cast<std::ptrdiff_t>(k));
  while (estimate_tokens(render_messages(bundle)) > options.token_budget) {
    if (bundle.few_shot.empty()) {
      throw ConfigError("prompt for " + to_string(descriptor.identity) + " (" + std::string(to_string(kind)) +
                        ") exceeds the token budget of " + std::to_string(options.token_budget) +
                        " even without few-shot examples");
    }
    bundle.few_shot.pop_back();
  }
  return bundle;
}

std::vector<ChatMessage> render_messages(const PromptBundle& bundle) {
  std::string system;
  for (std::size_t i = 0; i < bundle.sections.size(); ++i) {
    const auto& [name, body] = bundle.sections[i];
    auto idx = std::find(kSectionNames.begin(), kSectionNames.end(), name) - kSectionNames.begin();
    if (!system.empty()) system += "\n\n";
    system += idx < static_cast<std::ptrdiff_t>(kHeaders.size()) ? std::string(kHeaders[idx]) : "### " + name;
    system += '\n';
    system += body;
  }
  std::vector<ChatMessage> out;
  out.push_back({Role::system, std::move(system)});
  for (const auto& shot : bundle.few_shot) {
    out.push_back({Role::user, shot.input});
    out.push_back({Role::assistant, shot.output});
  }
  out.push_back({Role::user, bundle.subject});
  return out;
}

}  // namespace restgpt
