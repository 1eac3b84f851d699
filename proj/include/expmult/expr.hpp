#pragma once

// Problem files: a tiny line-oriented language for smooth programs.
//
//   # comment
//   vars: x1 x2
//   minimize: x1 + x2
//   subject_to:
//     ineq: x1^2 + x2^2 - 2      # means expr <= 0
//     eq:   x1 - x2              # means expr  = 0
//
// Expressions support + - * / unary minus, integer powers (^), parentheses
// and exp, log, sin, cos, sqrt. Gradients are exact (forward-mode dual
// numbers).

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "expmult/problem.hpp"

namespace expmult {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprKind { Constant, Variable, Add, Sub, Mul, Div, Neg, Pow, Call };
enum class Func { Exp, Log, Sin, Cos, Sqrt };

std::string_view to_string(Func f);

struct SourceLoc {
  std::size_t line = 0;
  std::size_t column = 0;
};

/// Immutable expression node.
struct Expr {
  ExprKind kind = ExprKind::Constant;
  double constant = 0.0;     // Constant
  std::size_t variable = 0;  // Variable
  int exponent = 0;          // Pow
  Func func = Func::Exp;     // Call
  ExprPtr lhs;               // unary operand / left child / Pow base / Call argument
  ExprPtr rhs;               // right child
  SourceLoc loc;
};

namespace ex {
ExprPtr constant(double v, SourceLoc loc = {});
ExprPtr variable(std::size_t index, SourceLoc loc = {});
ExprPtr binary(ExprKind kind, ExprPtr lhs, ExprPtr rhs, SourceLoc loc = {});
ExprPtr neg(ExprPtr operand, SourceLoc loc = {});
ExprPtr pow(ExprPtr base, int exponent, SourceLoc loc = {});
ExprPtr call(Func f, ExprPtr arg, SourceLoc loc = {});
}  // namespace ex

struct ProblemSource {
  std::vector<std::string> variables;
  ExprPtr objective;
  std::vector<ExprPtr> ineq;  ///< each means expr <= 0
  std::vector<ExprPtr> eq;    ///< each means expr = 0
};

/// Throws ParseError with the offending line and column.
ProblemSource parse_problem_file(std::string_view text);

/// Parses a single expression over the given variable names.
ExprPtr parse_expression(std::string_view text, const std::vector<std::string>& variables);

/// Throws DomainError for log of a nonpositive number, sqrt of a negative
/// number, or division by zero.
double eval_expr(const Expr& e, std::span<const double> x);

Vector grad_expr(const Expr& e, std::span<const double> x);

/// Value and gradient in one pass.
double eval_expr_grad(const Expr& e, std::span<const double> x, std::span<double> grad);

/// Renders an expression that parses back to the same tree.
std::string print_expr(const Expr& e, const std::vector<std::string>& variables);

/// Structural equality, ignoring source locations.
bool expr_equal(const Expr& a, const Expr& b);

/// Largest variable index referenced plus one (0 for a constant expression).
std::size_t expr_arity(const Expr& e);

/// Renders a full problem file; parse_problem_file(print_problem(s)) == s.
std::string print_problem(const ProblemSource& src);

/// A DiffFunction backed by an expression tree.
class ExprFunction final : public DiffFunction {
 public:
  ExprFunction(ExprPtr e, std::size_t dim) : e_(std::move(e)), dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  double value(std::span<const double> x) const override { return eval_expr(*e_, x); }
  double value_grad(std::span<const double> x, std::span<double> grad) const override {
    return eval_expr_grad(*e_, x, grad);
  }
  const Expr& expr() const { return *e_; }

 private:
  ExprPtr e_;
  std::size_t dim_;
};

/// Builds a ProblemSpec (equalities kept as equalities) from parsed source.
ProblemSpec to_problem(const ProblemSource& src);

}  // namespace expmult
