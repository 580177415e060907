#include "restgpt/constraint_dsl.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <set>

namespace restgpt::dsl {
namespace {

constexpr std::array<std::pair<std::string_view, RelOp>, 6> kRelOps{{
    {"<", RelOp::lt}, {">", RelOp::gt}, {"<=", RelOp::le}, {">=", RelOp::ge}, {"==", RelOp::eq}, {"!=", RelOp::ne}}};
constexpr std::array<std::pair<std::string_view, ArithOp>, 4> kArithOps{
    {{"+", ArithOp::add}, {"-", ArithOp::sub}, {"*", ArithOp::mul}, {"/", ArithOp::div}}};
constexpr std::array<std::pair<std::string_view, DepOp>, 5> kDepOps{{{"AllOrNone", DepOp::all_or_none},
                                                                     {"ZeroOrOne", DepOp::zero_or_one},
                                                                     {"OnlyOne", DepOp::only_one},
                                                                     {"Or", DepOp::or_},
                                                                     {"Requires", DepOp::requires_}}};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<DepOp> dep_op_from_name(std::string_view name) {
  std::string l = lower(name);
  for (const auto& [text, op] : kDepOps) {
    if (lower(text) == l) return op;
  }
  return std::nullopt;
}

std::string vocabulary() {
  std::string out;
  for (const auto& [text, op] : kDepOps) {
    if (!out.empty()) out += ", ";
    out += text;
  }
  return out;
}

bool is_reserved(std::string_view name) {
  std::string l = lower(name);
  return l == "and" || l == "or" || l == "not" || l == "true" || l == "false" || dep_op_from_name(name).has_value();
}

bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

bool is_plain_name(std::string_view name) {
  if (name.empty() || !is_name_start(name.front()) || name.back() == '.') return false;
  return std::all_of(name.begin(), name.end(), is_name_char) && !is_reserved(name);
}

std::string quote_name(std::string_view name) {
  if (is_plain_name(name)) return std::string(name);
  std::string out = "`";
  for (char c : name) {
    if (c == '`' || c == '\\') out += '\\';
    out += c;
  }
  return out + "`";
}

std::string quote_text(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    switch (c) {
      case '\'': out += "\\'"; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out + "'";
}

bool is_literal_zero(const ExprPtr& e) {
  auto* n = e->as<NumberLit>();
  return n && n->value == 0.0;
}

// ---------------------------------------------------------------- lexer

enum class Tok { number, text, name, quoted_name, lparen, rparen, comma, op, end };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
  double number = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (i_ >= src_.size()) {
        out.push_back({Tok::end, "", i_});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  void skip_space() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
  }

  bool digit_at(std::size_t k) const {
    return k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]));
  }

  Token next() {
    const std::size_t start = i_;
    const char c = src_[i_];
    if (digit_at(i_) || (c == '.' && digit_at(i_ + 1))) return lex_number(start);
    if (is_name_start(c)) {
      while (i_ < src_.size() && is_name_char(src_[i_])) ++i_;
      // A trailing '.' ends a sentence, not a name.
      while (i_ > start + 1 && src_[i_ - 1] == '.') --i_;
      return {Tok::name, std::string(src_.substr(start, i_ - start)), start};
    }
    if (c == '`') return {Tok::quoted_name, lex_quoted('`', start), start};
    if (c == '\'' || c == '"') return {Tok::text, lex_quoted(c, start), start};
    ++i_;
    switch (c) {
      case '(': return {Tok::lparen, "(", start};
      case ')': return {Tok::rparen, ")", start};
      case ',': return {Tok::comma, ",", start};
      case '+': case '-': case '*': case '/': return {Tok::op, std::string(1, c), start};
      case '<': case '>': case '!': case '=':
        if (i_ < src_.size() && src_[i_] == '=') {
          ++i_;
          return {Tok::op, std::string{c, '='}, start};
        }
        return {Tok::op, c == '=' ? "==" : std::string(1, c), start};
      case '&': case '|':
        if (i_ < src_.size() && src_[i_] == c) {
          ++i_;
          return {Tok::op, std::string{c, c}, start};
        }
        break;
      default: break;
    }
    throw SyntaxError("unexpected character '" + std::string(1, c) + "'", start);
  }

  Token lex_number(std::size_t start) {
    while (digit_at(i_)) ++i_;
    if (i_ < src_.size() && src_[i_] == '.') {
      ++i_;
      while (digit_at(i_)) ++i_;
    }
    if (i_ < src_.size() && (src_[i_] == 'e' || src_[i_] == 'E')) {
      std::size_t k = i_ + 1;
      if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
      if (digit_at(k)) {
        i_ = k;
        while (digit_at(i_)) ++i_;
      }
    }
    std::string text(src_.substr(start, i_ - start));
    auto value = parse_number(text);
    if (!value) throw SyntaxError("invalid number '" + text + "'", start);
    return {Tok::number, text, start, *value};
  }

  std::string lex_quoted(char quote, std::size_t start) {
    std::string out;
    ++i_;
    while (i_ < src_.size()) {
      char c = src_[i_++];
      if (c == quote) return out;
      if (c == '\\') {
        if (i_ >= src_.size()) break;
        char e = src_[i_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          default: out += e;
        }
        continue;
      }
      out += c;
    }
    throw SyntaxError("unterminated quoted text", start);
  }

  std::string_view src_;
  std::size_t i_ = 0;
};

// ---------------------------------------------------------------- parser

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  ExprPtr parse_all() {
    ExprPtr e = parse_or();
    if (peek().kind != Tok::end) throw SyntaxError("unexpected '" + peek().text + "'", peek().pos);
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(k_ + ahead, toks_.size() - 1)]; }
  const Token& take() { return toks_[std::min(k_++, toks_.size() - 1)]; }

  bool keyword(std::string_view word, std::string_view symbol) const {
    const Token& t = peek();
    if (t.kind == Tok::name) return lower(t.text) == word;
    return t.kind == Tok::op && t.text == symbol;
  }

  template <class F>
  static ExprPtr build(std::size_t pos, F&& f) {
    try {
      return f();
    } catch (const std::invalid_argument& e) {
      throw SyntaxError(e.what(), pos);
    }
  }

  ExprPtr parse_or() {
    std::size_t pos = peek().pos;
    std::vector<ExprPtr> args{parse_and()};
    while (keyword("or", "||")) {
      take();
      args.push_back(parse_and());
    }
    if (args.size() == 1) return args.front();
    return build(pos, [&] { return logical(LogicOp::or_, std::move(args)); });
  }

  ExprPtr parse_and() {
    std::size_t pos = peek().pos;
    std::vector<ExprPtr> args{parse_not()};
    while (keyword("and", "&&")) {
      take();
      args.push_back(parse_not());
    }
    if (args.size() == 1) return args.front();
    return build(pos, [&] { return logical(LogicOp::and_, std::move(args)); });
  }

  ExprPtr parse_not() {
    if (keyword("not", "!")) {
      std::size_t pos = take().pos;
      ExprPtr inner = parse_not();
      return build(pos, [&] { return logical(LogicOp::not_, {inner}); });
    }
    return parse_comparison();
  }

  ExprPtr parse_comparison() {
    ExprPtr lhs = parse_additive();
    const Token& t = peek();
    if (t.kind != Tok::op) return lhs;
    for (const auto& [text, op] : kRelOps) {
      if (t.text == text) {
        std::size_t pos = take().pos;
        ExprPtr rhs = parse_additive();
        return build(pos, [&] { return relational(op, lhs, rhs); });
      }
    }
    return lhs;
  }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_term();
    while (peek().kind == Tok::op && (peek().text == "+" || peek().text == "-")) {
      const Token& t = take();
      ArithOp op = t.text == "+" ? ArithOp::add : ArithOp::sub;
      ExprPtr rhs = parse_term();
      lhs = build(t.pos, [&] { return arithmetic(op, lhs, rhs); });
    }
    return lhs;
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_unary();
    while (peek().kind == Tok::op && (peek().text == "*" || peek().text == "/")) {
      const Token& t = take();
      ArithOp op = t.text == "*" ? ArithOp::mul : ArithOp::div;
      ExprPtr rhs = parse_unary();
      lhs = build(t.pos, [&] { return arithmetic(op, lhs, rhs); });
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (peek().kind == Tok::op && peek().text == "-" && peek(1).kind == Tok::number) {
      take();
      return number(-take().number);
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    const Token& t = take();
    switch (t.kind) {
      case Tok::number:
        return number(t.number);
      case Tok::text:
        return text(t.text);
      case Tok::quoted_name:
        if (t.text.empty()) throw SyntaxError("empty parameter name", t.pos);
        return param(t.text);
      case Tok::lparen: {
        ExprPtr inner = parse_or();
        expect(Tok::rparen, "')'");
        return inner;
      }
      case Tok::name: {
        if (peek().kind == Tok::lparen) return parse_call(t);
        std::string l = lower(t.text);
        if (l == "true" || l == "false") return boolean(l == "true");
        if (l == "and" || l == "or" || l == "not") throw SyntaxError("unexpected keyword '" + t.text + "'", t.pos);
        return param(t.text);
      }
      case Tok::end:
        throw SyntaxError("unexpected end of input", t.pos);
      default:
        throw SyntaxError("unexpected '" + t.text + "'", t.pos);
    }
  }

  ExprPtr parse_call(const Token& name) {
    auto op = dep_op_from_name(name.text);
    if (!op) {
      throw SyntaxError("unknown operator '" + name.text + "'; accepted operators: " + vocabulary(), name.pos);
    }
    take();  // '('
    std::vector<ExprPtr> args;
    if (peek().kind != Tok::rparen) {
      args.push_back(parse_or());
      while (peek().kind == Tok::comma) {
        take();
        args.push_back(parse_or());
      }
    }
    expect(Tok::rparen, "')' or ','");
    return build(name.pos, [&] { return dependency(*op, std::move(args)); });
  }

  void expect(Tok kind, std::string_view what) {
    const Token& t = peek();
    if (t.kind != kind) {
      throw SyntaxError("expected " + std::string(what) + ", found " + (t.kind == Tok::end ? "end of input" : "'" + t.text + "'"),
                        t.pos);
    }
    take();
  }

  std::vector<Token> toks_;
  std::size_t k_ = 0;
};

// ---------------------------------------------------------------- printer

enum Prec { kOr = 1, kAnd = 2, kNot = 3, kRel = 4, kAdd = 5, kMul = 6, kAtom = 7 };

int precedence(const Expr& e) {
  return std::visit(
      [](const auto& n) -> int {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Logical>) {
          return n.op == LogicOp::or_ ? kOr : n.op == LogicOp::and_ ? kAnd : kNot;
        } else if constexpr (std::is_same_v<T, Relational>) {
          return kRel;
        } else if constexpr (std::is_same_v<T, Arithmetic>) {
          return (n.op == ArithOp::add || n.op == ArithOp::sub) ? kAdd : kMul;
        } else {
          return kAtom;
        }
      },
      e.node());
}

void print_to(std::string& out, const Expr& e, int min_prec);

void print_child(std::string& out, const Expr& e, int min_prec) {
  if (precedence(e) < min_prec) {
    out += '(';
    print_to(out, e, kOr);
    out += ')';
  } else {
    print_to(out, e, min_prec);
  }
}

void print_to(std::string& out, const Expr& e, int) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ParamRef>) {
          out += quote_name(n.name);
        } else if constexpr (std::is_same_v<T, NumberLit>) {
          out += format_number(n.value);
        } else if constexpr (std::is_same_v<T, TextLit>) {
          out += quote_text(n.value);
        } else if constexpr (std::is_same_v<T, BoolLit>) {
          out += n.value ? "true" : "false";
        } else if constexpr (std::is_same_v<T, Arithmetic>) {
          int p = (n.op == ArithOp::add || n.op == ArithOp::sub) ? kAdd : kMul;
          print_child(out, *n.lhs, p);
          out += ' ';
          out += to_string(n.op);
          out += ' ';
          print_child(out, *n.rhs, p + 1);
        } else if constexpr (std::is_same_v<T, Relational>) {
          print_child(out, *n.lhs, kAdd);
          out += ' ';
          out += to_string(n.op);
          out += ' ';
          print_child(out, *n.rhs, kAdd);
        } else if constexpr (std::is_same_v<T, Dependency>) {
          out += to_string(n.op);
          out += '(';
          for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i) out += ", ";
            print_child(out, *n.args[i], kOr);
          }
          out += ')';
        } else if constexpr (std::is_same_v<T, Logical>) {
          if (n.op == LogicOp::not_) {
            out += "NOT ";
            print_child(out, *n.args.front(), kNot);
            return;
          }
          int child_prec = n.op == LogicOp::or_ ? kAnd : kNot;
          const char* sep = n.op == LogicOp::or_ ? " OR " : " AND ";
          for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i) out += sep;
            print_child(out, *n.args[i], child_prec);
          }
        }
      },
      e.node());
}

// ---------------------------------------------------------------- evaluation

struct Missing {};
struct Failure {
  std::string reason;
};
using Outcome = std::variant<Value, Missing, Failure>;

class Evaluator {
 public:
  explicit Evaluator(const Assignment& a) : assignment_(a) {}

  std::vector<std::string> diagnostics;

  bool present(const std::string& name) const {
    auto it = assignment_.find(name);
    return it != assignment_.end() && it->second.has_value();
  }

  Outcome value_of(const Expr& e) {
    if (auto* p = e.as<ParamRef>()) {
      auto it = assignment_.find(p->name);
      if (it == assignment_.end() || !it->second) return Missing{};
      return *it->second;
    }
    if (auto* n = e.as<NumberLit>()) return Value{n->value};
    if (auto* t = e.as<TextLit>()) return Value{t->value};
    if (auto* b = e.as<BoolLit>()) return Value{b->value};
    if (auto* a = e.as<Arithmetic>()) {
      Outcome l = value_of(*a->lhs);
      Outcome r = value_of(*a->rhs);
      if (std::holds_alternative<Missing>(l) || std::holds_alternative<Missing>(r)) return Missing{};
      if (auto* f = std::get_if<Failure>(&l)) return *f;
      if (auto* f = std::get_if<Failure>(&r)) return *f;
      const Value& lv = std::get<Value>(l);
      const Value& rv = std::get<Value>(r);
      if (!is_number(lv) || !is_number(rv)) {
        return Failure{"arithmetic '" + std::string(to_string(a->op)) + "' needs numeric operands"};
      }
      double x = std::get<double>(lv);
      double y = std::get<double>(rv);
      switch (a->op) {
        case ArithOp::add: return Value{x + y};
        case ArithOp::sub: return Value{x - y};
        case ArithOp::mul: return Value{x * y};
        case ArithOp::div:
          if (y == 0.0) return Failure{"division by zero"};
          return Value{x / y};
      }
    }
    return Failure{"predicate used where a value is expected"};
  }

  TernaryVerdict fail(std::string reason) {
    diagnostics.push_back(std::move(reason));
    return TernaryVerdict::violated;
  }

  TernaryVerdict relation(const Relational& r) {
    Outcome l = value_of(*r.lhs);
    Outcome rr = value_of(*r.rhs);
    if (std::holds_alternative<Missing>(l) || std::holds_alternative<Missing>(rr)) return TernaryVerdict::inapplicable;
    if (auto* f = std::get_if<Failure>(&l)) return fail(f->reason);
    if (auto* f = std::get_if<Failure>(&rr)) return fail(f->reason);
    const Value& a = std::get<Value>(l);
    const Value& b = std::get<Value>(rr);
    if (a.index() != b.index()) {
      return fail("type mismatch: cannot compare " + to_display(a) + " with " + to_display(b));
    }
    auto verdict = [](bool ok) { return ok ? TernaryVerdict::satisfied : TernaryVerdict::violated; };
    if (is_number(a)) {
      double x = std::get<double>(a);
      double y = std::get<double>(b);
      switch (r.op) {
        case RelOp::lt: return verdict(x < y);
        case RelOp::gt: return verdict(x > y);
        case RelOp::le: return verdict(x <= y);
        case RelOp::ge: return verdict(x >= y);
        case RelOp::eq: return verdict(x == y);
        case RelOp::ne: return verdict(x != y);
      }
    }
    if (r.op == RelOp::eq) return verdict(a == b);
    if (r.op == RelOp::ne) return verdict(a != b);
    return fail("ordering operator '" + std::string(to_string(r.op)) + "' needs numeric operands");
  }

  bool truth(const Expr& e) {
    if (auto* p = e.as<ParamRef>()) return present(p->name);
    return verdict_of(e) == TernaryVerdict::satisfied;
  }

  TernaryVerdict verdict_of(const Expr& e) {
    if (auto* r = e.as<Relational>()) return relation(*r);
    if (auto* d = e.as<Dependency>()) {
      auto verdict = [](bool ok) { return ok ? TernaryVerdict::satisfied : TernaryVerdict::violated; };
      if (d->op == DepOp::requires_) {
        bool condition = truth(*d->args[0]);
        return verdict(!condition || truth(*d->args[1]));
      }
      std::size_t count = 0;
      for (const auto& arg : d->args) count += truth(*arg) ? 1 : 0;
      switch (d->op) {
        case DepOp::all_or_none: return verdict(count == 0 || count == d->args.size());
        case DepOp::zero_or_one: return verdict(count <= 1);
        case DepOp::only_one: return verdict(count == 1);
        case DepOp::or_: return verdict(count >= 1);
        case DepOp::requires_: break;
      }
    }
    if (auto* l = e.as<Logical>()) {
      if (l->op == LogicOp::not_) {
        TernaryVerdict v = verdict_of(*l->args.front());
        if (v == TernaryVerdict::satisfied) return TernaryVerdict::violated;
        if (v == TernaryVerdict::violated) return TernaryVerdict::satisfied;
        return v;
      }
      const TernaryVerdict dominant =
          l->op == LogicOp::and_ ? TernaryVerdict::violated : TernaryVerdict::satisfied;
      bool unknown = false;
      bool decided = false;
      for (const auto& arg : l->args) {
        TernaryVerdict v = verdict_of(*arg);
        if (v == dominant) decided = true;
        if (v == TernaryVerdict::inapplicable) unknown = true;
      }
      if (decided) return dominant;
      if (unknown) return TernaryVerdict::inapplicable;
      return l->op == LogicOp::and_ ? TernaryVerdict::satisfied : TernaryVerdict::violated;
    }
    if (auto* p = e.as<ParamRef>()) return present(p->name) ? TernaryVerdict::satisfied : TernaryVerdict::violated;
    if (auto* b = e.as<BoolLit>()) return b->value ? TernaryVerdict::satisfied : TernaryVerdict::violated;

    // Value roots: numbers are truthy when non-zero.
    Outcome o = value_of(e);
    if (std::holds_alternative<Missing>(o)) return TernaryVerdict::inapplicable;
    if (auto* f = std::get_if<Failure>(&o)) return fail(f->reason);
    const Value& v = std::get<Value>(o);
    if (auto* d = std::get_if<double>(&v)) return *d != 0.0 ? TernaryVerdict::satisfied : TernaryVerdict::violated;
    if (auto* b = std::get_if<bool>(&v)) return *b ? TernaryVerdict::satisfied : TernaryVerdict::violated;
    return fail("text value is not a predicate");
  }

 private:
  const Assignment& assignment_;
};

// ---------------------------------------------------------------- canonical form

ExprPtr canonical(const ExprPtr& e);

void sort_by_text(std::vector<ExprPtr>& args) {
  std::vector<std::pair<std::string, ExprPtr>> keyed;
  keyed.reserve(args.size());
  for (auto& a : args) keyed.emplace_back(print(*a), a);
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (std::size_t i = 0; i < args.size(); ++i) args[i] = keyed[i].second;
}

ExprPtr canonical(const ExprPtr& e) {
  if (auto* a = e->as<Arithmetic>()) {
    ExprPtr l = canonical(a->lhs);
    ExprPtr r = canonical(a->rhs);
    if ((a->op == ArithOp::add || a->op == ArithOp::mul) && print(*r) < print(*l)) std::swap(l, r);
    return arithmetic(a->op, l, r);
  }
  if (auto* r = e->as<Relational>()) {
    ExprPtr l = canonical(r->lhs);
    ExprPtr rr = canonical(r->rhs);
    RelOp op = r->op;
    if (op == RelOp::gt || op == RelOp::ge) {
      std::swap(l, rr);
      op = op == RelOp::gt ? RelOp::lt : RelOp::le;
    } else if ((op == RelOp::eq || op == RelOp::ne) && print(*rr) < print(*l)) {
      std::swap(l, rr);
    }
    return relational(op, l, rr);
  }
  if (auto* d = e->as<Dependency>()) {
    std::vector<ExprPtr> args;
    for (const auto& a : d->args) args.push_back(canonical(a));
    if (d->op != DepOp::requires_) sort_by_text(args);
    return dependency(d->op, std::move(args));
  }
  if (auto* l = e->as<Logical>()) {
    if (l->op == LogicOp::not_) {
      ExprPtr inner = canonical(l->args.front());
      if (auto* n = inner->as<Logical>(); n && n->op == LogicOp::not_) return n->args.front();
      return logical(LogicOp::not_, {inner});
    }
    std::vector<ExprPtr> args;
    for (const auto& a : l->args) {
      ExprPtr c = canonical(a);
      if (auto* same = c->as<Logical>(); same && same->op == l->op) {
        args.insert(args.end(), same->args.begin(), same->args.end());
      } else {
        args.push_back(c);
      }
    }
    sort_by_text(args);
    return logical(l->op, std::move(args));
  }
  return e;
}

void collect_params(const Expr& e, std::set<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ParamRef>) {
          out.insert(n.name);
        } else if constexpr (std::is_same_v<T, Arithmetic> || std::is_same_v<T, Relational>) {
          collect_params(*n.lhs, out);
          collect_params(*n.rhs, out);
        } else if constexpr (std::is_same_v<T, Dependency> || std::is_same_v<T, Logical>) {
          for (const auto& a : n.args) collect_params(*a, out);
        }
      },
      e.node());
}

Json node_json(const Expr& e) {
  return std::visit(
      [](const auto& n) -> Json {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ParamRef>) {
          return Json{{"kind", "param"}, {"name", n.name}};
        } else if constexpr (std::is_same_v<T, NumberLit>) {
          return Json{{"kind", "number"}, {"value", n.value}};
        } else if constexpr (std::is_same_v<T, TextLit>) {
          return Json{{"kind", "text"}, {"value", n.value}};
        } else if constexpr (std::is_same_v<T, BoolLit>) {
          return Json{{"kind", "bool"}, {"value", n.value}};
        } else if constexpr (std::is_same_v<T, Arithmetic>) {
          return Json{{"kind", "arithmetic"}, {"op", to_string(n.op)}, {"lhs", node_json(*n.lhs)}, {"rhs", node_json(*n.rhs)}};
        } else if constexpr (std::is_same_v<T, Relational>) {
          return Json{{"kind", "relational"}, {"op", to_string(n.op)}, {"lhs", node_json(*n.lhs)}, {"rhs", node_json(*n.rhs)}};
        } else {
          Json args = Json::array();
          for (const auto& a : n.args) args.push_back(node_json(*a));
          return Json{{"kind", std::is_same_v<T, Dependency> ? "dependency" : "logical"}, {"op", to_string(n.op)}, {"args", args}};
        }
      },
      e.node());
}

template <class Op, std::size_t N>
Op op_from(const std::array<std::pair<std::string_view, Op>, N>& table, const std::string& text) {
  for (const auto& [t, op] : table) {
    if (t == text) return op;
  }
  throw std::invalid_argument("unknown operator '" + text + "'");
}

ExprPtr node_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("constraint node must be an object");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "param") return param(j.at("name").get<std::string>());
  if (kind == "number") return number(j.at("value").get<double>());
  if (kind == "text") return text(j.at("value").get<std::string>());
  if (kind == "bool") return boolean(j.at("value").get<bool>());
  const std::string op = j.at("op").get<std::string>();
  if (kind == "arithmetic") return arithmetic(op_from(kArithOps, op), node_from_json(j.at("lhs")), node_from_json(j.at("rhs")));
  if (kind == "relational") return relational(op_from(kRelOps, op), node_from_json(j.at("lhs")), node_from_json(j.at("rhs")));
  std::vector<ExprPtr> args;
  for (const auto& a : j.at("args")) args.push_back(node_from_json(a));
  if (kind == "dependency") return dependency(op_from(kDepOps, op), std::move(args));
  if (kind == "logical") {
    static constexpr std::array<std::pair<std::string_view, LogicOp>, 3> kLogic{
        {{"AND", LogicOp::and_}, {"OR", LogicOp::or_}, {"NOT", LogicOp::not_}}};
    return logical(op_from(kLogic, op), std::move(args));
  }
  throw std::invalid_argument("unknown constraint node kind '" + kind + "'");
}

}  // namespace

std::string_view to_string(RelOp op) {
  for (const auto& [t, o] : kRelOps) {
    if (o == op) return t;
  }
  return "?";
}

std::string_view to_string(ArithOp op) {
  for (const auto& [t, o] : kArithOps) {
    if (o == op) return t;
  }
  return "?";
}

std::string_view to_string(DepOp op) {
  for (const auto& [t, o] : kDepOps) {
    if (o == op) return t;
  }
  return "?";
}

std::string_view to_string(LogicOp op) {
  switch (op) {
    case LogicOp::and_: return "AND";
    case LogicOp::or_: return "OR";
    case LogicOp::not_: return "NOT";
  }
  return "?";
}

std::string_view to_string(TernaryVerdict v) {
  switch (v) {
    case TernaryVerdict::satisfied: return "satisfied";
    case TernaryVerdict::violated: return "violated";
    case TernaryVerdict::inapplicable: return "inapplicable";
  }
  return "?";
}

bool Expr::is_value() const {
  return std::holds_alternative<ParamRef>(node_) || std::holds_alternative<NumberLit>(node_) ||
         std::holds_alternative<TextLit>(node_) || std::holds_alternative<BoolLit>(node_) ||
         std::holds_alternative<Arithmetic>(node_);
}

bool Expr::is_predicate() const {
  return std::holds_alternative<ParamRef>(node_) || std::holds_alternative<BoolLit>(node_) ||
         std::holds_alternative<Relational>(node_) || std::holds_alternative<Dependency>(node_) ||
         std::holds_alternative<Logical>(node_);
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node().index() != b.node().index()) return false;
  auto same_args = [](const std::vector<ExprPtr>& x, const std::vector<ExprPtr>& y) {
    return x.size() == y.size() &&
           std::equal(x.begin(), x.end(), y.begin(), [](const ExprPtr& p, const ExprPtr& q) { return *p == *q; });
  };
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        const T& m = std::get<T>(b.node());
        if constexpr (std::is_same_v<T, Arithmetic> || std::is_same_v<T, Relational>) {
          return n.op == m.op && *n.lhs == *m.lhs && *n.rhs == *m.rhs;
        } else if constexpr (std::is_same_v<T, Dependency> || std::is_same_v<T, Logical>) {
          return n.op == m.op && same_args(n.args, m.args);
        } else {
          return n == m;
        }
      },
      a.node());
}

ExprPtr param(std::string name) {
  if (name.empty()) throw std::invalid_argument("parameter name must not be empty");
  return std::make_shared<const Expr>(ParamRef{std::move(name)});
}

ExprPtr number(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("numeric literal must be finite");
  return std::make_shared<const Expr>(NumberLit{v});
}

ExprPtr text(std::string v) { return std::make_shared<const Expr>(TextLit{std::move(v)}); }
ExprPtr boolean(bool v) { return std::make_shared<const Expr>(BoolLit{v}); }

ExprPtr arithmetic(ArithOp op, ExprPtr lhs, ExprPtr rhs) {
  if (!lhs || !rhs || !lhs->is_value() || !rhs->is_value()) {
    throw std::invalid_argument("arithmetic '" + std::string(to_string(op)) + "' needs value operands");
  }
  if (op == ArithOp::div && is_literal_zero(rhs)) throw std::invalid_argument("division by literal zero");
  return std::make_shared<const Expr>(Arithmetic{op, std::move(lhs), std::move(rhs)});
}

ExprPtr relational(RelOp op, ExprPtr lhs, ExprPtr rhs) {
  if (!lhs || !rhs || !lhs->is_value() || !rhs->is_value()) {
    throw std::invalid_argument("relational '" + std::string(to_string(op)) + "' needs value operands");
  }
  return std::make_shared<const Expr>(Relational{op, std::move(lhs), std::move(rhs)});
}

ExprPtr dependency(DepOp op, std::vector<ExprPtr> args) {
  if (op == DepOp::requires_ && args.size() != 2) {
    throw std::invalid_argument("Requires takes exactly 2 arguments (condition, consequence)");
  }
  if (op != DepOp::requires_ && args.size() < 2) {
    throw std::invalid_argument(std::string(to_string(op)) + " takes at least 2 arguments");
  }
  for (const auto& a : args) {
    if (!a || !a->is_predicate()) {
      throw std::invalid_argument(std::string(to_string(op)) + " arguments must be parameter names or predicates");
    }
  }
  return std::make_shared<const Expr>(Dependency{op, std::move(args)});
}

ExprPtr logical(LogicOp op, std::vector<ExprPtr> args) {
  if (op == LogicOp::not_ && args.size() != 1) throw std::invalid_argument("NOT takes exactly 1 operand");
  if (op != LogicOp::not_ && args.size() < 2) {
    throw std::invalid_argument(std::string(to_string(op)) + " takes at least 2 operands");
  }
  for (const auto& a : args) {
    if (!a || !a->is_predicate()) {
      throw std::invalid_argument(std::string(to_string(op)) + " operands must be predicates");
    }
  }
  return std::make_shared<const Expr>(Logical{op, std::move(args)});
}

ConstraintExpr::ConstraintExpr(ExprPtr root) : root_(std::move(root)) {
  if (!root_) throw std::invalid_argument("constraint root must not be null");
}

SyntaxError::SyntaxError(const std::string& message, std::size_t position)
    : std::runtime_error(message + " at position " + std::to_string(position)), position_(position) {}

ConstraintExpr parse_constraint(std::string_view source) {
  if (source.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw SyntaxError("empty constraint", 0);
  }
  Parser parser(Lexer(source).run());
  return ConstraintExpr(parser.parse_all());
}

std::string print(const Expr& expr) {
  std::string out;
  print_to(out, expr, kOr);
  return out;
}

std::string print(const ConstraintExpr& expr) { return print(expr.root()); }

std::vector<std::string> referenced_parameters(const ConstraintExpr& expr) {
  std::set<std::string> names;
  collect_params(expr.root(), names);
  return {names.begin(), names.end()};
}

Evaluation evaluate(const ConstraintExpr& expr, const Assignment& assignment) {
  Evaluator ev(assignment);
  TernaryVerdict v = ev.verdict_of(expr.root());
  return {v, std::move(ev.diagnostics)};
}

ConstraintExpr canonicalize(const ConstraintExpr& expr) { return ConstraintExpr(canonical(expr.root_ptr())); }

Json to_json(const ConstraintExpr& expr) { return node_json(expr.root()); }

ConstraintExpr constraint_from_json(const Json& j) { return ConstraintExpr(node_from_json(j)); }

}  // namespace restgpt::dsl
