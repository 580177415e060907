#pragma once

// Inter-parameter constraint language.
//
//   expr        := or
//   or          := and (("OR" | "||") and)*
//   and         := not (("AND" | "&&") not)*
//   not         := ("NOT" | "!") not | comparison
//   comparison  := additive (relop additive)?
//   additive    := term (("+" | "-") term)*
//   term        := unary (("*" | "/") unary)*
//   unary       := "-" NUMBER | primary
//   primary     := NUMBER | STRING | "true" | "false" | NAME
//                | DepOp "(" expr ("," expr)* ")" | "(" expr ")"
//
// NAME is [A-Za-z_][A-Za-z0-9_.]* or a backtick-quoted name. DepOp is one of
// AllOrNone, ZeroOrOne, OnlyOne, Or, Requires. A bare name in predicate
// position (a dependency argument, a logical operand, the root) means "the
// parameter is present".

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "restgpt/value.hpp"

namespace restgpt::dsl {

enum class RelOp { lt, gt, le, ge, eq, ne };
enum class ArithOp { add, sub, mul, div };
enum class DepOp { all_or_none, zero_or_one, only_one, or_, requires_ };
enum class LogicOp { and_, or_, not_ };

std::string_view to_string(RelOp op);
std::string_view to_string(ArithOp op);
std::string_view to_string(DepOp op);
std::string_view to_string(LogicOp op);

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct ParamRef {
  std::string name;
  bool operator==(const ParamRef&) const = default;
};
struct NumberLit {
  double value = 0;
  bool operator==(const NumberLit&) const = default;
};
struct TextLit {
  std::string value;
  bool operator==(const TextLit&) const = default;
};
struct BoolLit {
  bool value = false;
  bool operator==(const BoolLit&) const = default;
};
struct Arithmetic {
  ArithOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct Relational {
  RelOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct Dependency {
  DepOp op;
  std::vector<ExprPtr> args;
};
struct Logical {
  LogicOp op;
  std::vector<ExprPtr> args;
};

/// Immutable AST node. Children are shared, so copies are cheap and the tree
/// can be read from any thread.
class Expr {
 public:
  using Node = std::variant<ParamRef, NumberLit, TextLit, BoolLit, Arithmetic, Relational, Dependency, Logical>;

  explicit Expr(Node node) : node_(std::move(node)) {}

  const Node& node() const { return node_; }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&node_);
  }

  /// Parameters, literals, and arithmetic.
  bool is_value() const;
  /// Relational, dependency, and logical nodes, plus bare names and booleans.
  bool is_predicate() const;

 private:
  Node node_;
};

bool operator==(const Expr& a, const Expr& b);

// Validating constructors; they enforce the arity and typing rules and throw
// std::invalid_argument on violation.
ExprPtr param(std::string name);
ExprPtr number(double v);
ExprPtr text(std::string v);
ExprPtr boolean(bool v);
ExprPtr arithmetic(ArithOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr relational(RelOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr dependency(DepOp op, std::vector<ExprPtr> args);
ExprPtr logical(LogicOp op, std::vector<ExprPtr> args);

/// A parsed constraint. Value type over a shared immutable tree.
class ConstraintExpr {
 public:
  explicit ConstraintExpr(ExprPtr root);

  const Expr& root() const { return *root_; }
  const ExprPtr& root_ptr() const { return root_; }

  friend bool operator==(const ConstraintExpr& a, const ConstraintExpr& b) { return *a.root_ == *b.root_; }

 private:
  ExprPtr root_;
};

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(const std::string& message, std::size_t position);
  /// 0-based byte offset into the parsed text.
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

ConstraintExpr parse_constraint(std::string_view text);

/// Prints in the surface syntax; parse_constraint(print(e)) == e.
std::string print(const ConstraintExpr& expr);
std::string print(const Expr& expr);

/// Every parameter name referenced anywhere in the expression, sorted, unique.
std::vector<std::string> referenced_parameters(const ConstraintExpr& expr);

enum class TernaryVerdict { satisfied, violated, inapplicable };
std::string_view to_string(TernaryVerdict v);

/// Parameter name → value; a missing key or nullopt means "absent".
using Assignment = std::map<std::string, std::optional<Value>>;

struct Evaluation {
  TernaryVerdict verdict;
  /// Type mismatches and other reasons a verdict was forced to violated.
  std::vector<std::string> diagnostics;
};

Evaluation evaluate(const ConstraintExpr& expr, const Assignment& assignment);
inline TernaryVerdict evaluate_constraint(const ConstraintExpr& expr, const Assignment& assignment) {
  return evaluate(expr, assignment).verdict;
}

/// Normal form used for rule matching: commutative operands and dependency
/// arguments sorted (Requires keeps its order), `>`/`>=` flipped to `<`/`<=`,
/// nested AND/OR flattened, double negation removed. Idempotent and
/// verdict-preserving.
ConstraintExpr canonicalize(const ConstraintExpr& expr);

/// Stable JSON form: {"kind": ..., ...}.
Json to_json(const ConstraintExpr& expr);
ConstraintExpr constraint_from_json(const Json& j);

}  // namespace restgpt::dsl
