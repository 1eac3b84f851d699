#include "expmult/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "expmult/error.hpp"

namespace expmult {

std::string_view to_string(Func f) {
  switch (f) {
    case Func::Exp:
      return "exp";
    case Func::Log:
      return "log";
    case Func::Sin:
      return "sin";
    case Func::Cos:
      return "cos";
    case Func::Sqrt:
      return "sqrt";
  }
  return "exp";
}

namespace {

std::optional<Func> func_from_name(std::string_view s) {
  if (s == "exp") return Func::Exp;
  if (s == "log") return Func::Log;
  if (s == "sin") return Func::Sin;
  if (s == "cos") return Func::Cos;
  if (s == "sqrt") return Func::Sqrt;
  return std::nullopt;
}

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

}  // namespace

namespace ex {

ExprPtr constant(double v, SourceLoc loc) {
  Expr e;
  e.kind = ExprKind::Constant;
  e.constant = v;
  e.loc = loc;
  return make(std::move(e));
}

ExprPtr variable(std::size_t index, SourceLoc loc) {
  Expr e;
  e.kind = ExprKind::Variable;
  e.variable = index;
  e.loc = loc;
  return make(std::move(e));
}

ExprPtr binary(ExprKind kind, ExprPtr lhs, ExprPtr rhs, SourceLoc loc) {
  Expr e;
  e.kind = kind;
  e.lhs = std::move(lhs);
  e.rhs = std::move(rhs);
  e.loc = loc;
  return make(std::move(e));
}

ExprPtr neg(ExprPtr operand, SourceLoc loc) {
  Expr e;
  e.kind = ExprKind::Neg;
  e.lhs = std::move(operand);
  e.loc = loc;
  return make(std::move(e));
}

ExprPtr pow(ExprPtr base, int exponent, SourceLoc loc) {
  Expr e;
  e.kind = ExprKind::Pow;
  e.lhs = std::move(base);
  e.exponent = exponent;
  e.loc = loc;
  return make(std::move(e));
}

ExprPtr call(Func f, ExprPtr arg, SourceLoc loc) {
  Expr e;
  e.kind = ExprKind::Call;
  e.func = f;
  e.lhs = std::move(arg);
  e.loc = loc;
  return make(std::move(e));
}

}  // namespace ex

// ---------------------------------------------------------------------------
// Parsing

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Recursive-descent parser over a single line of text.
class ExprParser {
 public:
  ExprParser(std::string_view text, std::size_t line, std::size_t col0,
             const std::vector<std::string>& vars)
      : text_(text), line_(line), col0_(col0), vars_(vars) {}

  ExprPtr parse_all() {
    skip_ws();
    if (at_end()) fail("expected an expression");
    ExprPtr e = parse_expr();
    skip_ws();
    if (!at_end()) fail(std::string("unexpected '") + peek() + "'");
    return e;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_;
  std::size_t col0_;
  const std::vector<std::string>& vars_;

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  SourceLoc loc() const { return {line_, col0_ + pos_}; }

  [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, pos_); }
  [[noreturn]] void fail_at(const std::string& msg, std::size_t pos) const {
    throw ParseError(msg, line_, col0_ + pos);
  }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      skip_ws();
      fail(std::string("expected '") + c + "'");
    }
  }

  // expr := term (("+"|"-") term)*
  ExprPtr parse_expr() {
    ExprPtr lhs = parse_term();
    for (;;) {
      skip_ws();
      const SourceLoc l = loc();
      if (accept('+')) {
        lhs = ex::binary(ExprKind::Add, lhs, parse_term(), l);
      } else if (accept('-')) {
        lhs = ex::binary(ExprKind::Sub, lhs, parse_term(), l);
      } else {
        return lhs;
      }
    }
  }

  // term := unary (("*"|"/") unary)*
  ExprPtr parse_term() {
    ExprPtr lhs = parse_unary();
    for (;;) {
      skip_ws();
      const SourceLoc l = loc();
      if (accept('*')) {
        lhs = ex::binary(ExprKind::Mul, lhs, parse_unary(), l);
      } else if (accept('/')) {
        lhs = ex::binary(ExprKind::Div, lhs, parse_unary(), l);
      } else {
        return lhs;
      }
    }
  }

  // unary := "-" unary | factor
  ExprPtr parse_unary() {
    skip_ws();
    const SourceLoc l = loc();
    if (accept('-')) {
      return ex::neg(parse_unary(), l);
    }
    return parse_factor();
  }

  // factor := base ("^" integer)?
  ExprPtr parse_factor() {
    ExprPtr base = parse_base();
    skip_ws();
    const SourceLoc l = loc();
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      bool negative = false;
      if (peek() == '-') {
        negative = true;
        ++pos_;
      }
      const std::size_t digits = pos_;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      if (pos_ == digits) fail_at("exponent must be an integer literal", start);
      int value = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + digits, text_.data() + pos_, value);
      if (ec != std::errc()) fail_at("exponent out of range", start);
      if (peek() == '.' || peek() == 'e' || peek() == 'E') {
        fail_at("exponent must be an integer literal", start);
      }
      return ex::pow(base, negative ? -value : value, l);
    }
    return base;
  }

  // base := number | ident | "(" expr ")" | func "(" expr ")"
  ExprPtr parse_base() {
    skip_ws();
    const SourceLoc l = loc();
    const char c = peek();
    if (at_end()) fail("unexpected end of expression");
    if (c == '(') {
      ++pos_;
      ExprPtr e = parse_expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return parse_number();
    }
    if (is_ident_start(c)) {
      const std::size_t start = pos_;
      while (!at_end() && is_ident_char(peek())) ++pos_;
      const std::string_view name = text_.substr(start, pos_ - start);
      if (auto f = func_from_name(name)) {
        skip_ws();
        if (peek() != '(') fail("expected '(' after function name");
        ++pos_;
        ExprPtr arg = parse_expr();
        expect(')');
        return ex::call(*f, arg, l);
      }
      auto it = std::find(vars_.begin(), vars_.end(), name);
      if (it == vars_.end()) {
        fail_at("unknown identifier '" + std::string(name) + "'", start);
      }
      return ex::variable(static_cast<std::size_t>(it - vars_.begin()), l);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  ExprPtr parse_number() {
    const std::size_t start = pos_;
    const SourceLoc l = loc();
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (peek() == '.') {
      ++pos_;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (peek() == 'e' || peek() == 'E') {
      std::size_t save = pos_;
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      if (!std::isdigit(static_cast<unsigned char>(peek()))) {
        pos_ = save;
      } else {
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      fail_at("malformed number", start);
    }
    return ex::constant(v, l);
  }
};

struct Line {
  std::string_view text;  // comment stripped
  std::size_t number;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> out;
  std::size_t start = 0;
  std::size_t number = 1;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    out.push_back({line, number});
    ++number;
    start = end + 1;
  }
  return out;
}

}  // namespace

ExprPtr parse_expression(std::string_view text, const std::vector<std::string>& variables) {
  return ExprParser(text, 1, 1, variables).parse_all();
}

ProblemSource parse_problem_file(std::string_view text) {
  ProblemSource src;
  bool have_vars = false;
  bool have_objective = false;
  bool have_subject_to = false;
  std::size_t last_line = 1;

  for (const Line& line : split_lines(text)) {
    last_line = line.number;
    std::size_t i = 0;
    while (i < line.text.size() && std::isspace(static_cast<unsigned char>(line.text[i]))) ++i;
    if (i == line.text.size()) continue;

    const std::size_t colon = line.text.find(':', i);
    if (colon == std::string_view::npos) {
      throw ParseError("expected a section keyword (vars:, minimize:, subject_to:, ineq:, eq:)",
                       line.number, i + 1);
    }
    const std::string_view keyword = line.text.substr(i, colon - i);
    const std::string_view rest = line.text.substr(colon + 1);
    const std::size_t rest_col = colon + 2;

    if (keyword == "vars") {
      if (have_vars) throw ParseError("duplicate section 'vars'", line.number, i + 1);
      have_vars = true;
      std::size_t j = 0;
      while (j < rest.size()) {
        if (std::isspace(static_cast<unsigned char>(rest[j]))) {
          ++j;
          continue;
        }
        const std::size_t start = j;
        if (!is_ident_start(rest[j])) {
          throw ParseError("invalid variable name", line.number, rest_col + j);
        }
        while (j < rest.size() && is_ident_char(rest[j])) ++j;
        if (j < rest.size() && !std::isspace(static_cast<unsigned char>(rest[j]))) {
          throw ParseError("invalid variable name", line.number, rest_col + j);
        }
        std::string name(rest.substr(start, j - start));
        if (func_from_name(name)) {
          throw ParseError("'" + name + "' is a reserved function name", line.number,
                           rest_col + start);
        }
        if (std::find(src.variables.begin(), src.variables.end(), name) != src.variables.end()) {
          throw ParseError("duplicate variable '" + name + "'", line.number, rest_col + start);
        }
        src.variables.push_back(std::move(name));
      }
      if (src.variables.empty()) {
        throw ParseError("zero variables declared", line.number, i + 1);
      }
    } else if (keyword == "minimize") {
      if (!have_vars) throw ParseError("'minimize:' before 'vars:'", line.number, i + 1);
      if (have_objective) throw ParseError("duplicate section 'minimize'", line.number, i + 1);
      have_objective = true;
      src.objective = ExprParser(rest, line.number, rest_col, src.variables).parse_all();
    } else if (keyword == "subject_to") {
      if (!have_objective) {
        throw ParseError("'subject_to:' before 'minimize:'", line.number, i + 1);
      }
      if (have_subject_to) {
        throw ParseError("duplicate section 'subject_to'", line.number, i + 1);
      }
      for (std::size_t j = 0; j < rest.size(); ++j) {
        if (!std::isspace(static_cast<unsigned char>(rest[j]))) {
          throw ParseError("unexpected text after 'subject_to:'", line.number, rest_col + j);
        }
      }
      have_subject_to = true;
    } else if (keyword == "ineq" || keyword == "eq") {
      if (!have_subject_to) {
        throw ParseError("constraint outside 'subject_to:' section", line.number, i + 1);
      }
      ExprPtr e = ExprParser(rest, line.number, rest_col, src.variables).parse_all();
      (keyword == "ineq" ? src.ineq : src.eq).push_back(std::move(e));
    } else {
      throw ParseError("unknown section '" + std::string(keyword) + "'", line.number, i + 1);
    }
  }

  if (!have_vars) throw ParseError("missing 'vars:' section", last_line, 1);
  if (!have_objective) throw ParseError("missing 'minimize:' section", last_line, 1);
  return src;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

[[noreturn]] void domain_fail(const Expr& e, const std::string& msg) {
  throw DomainError(msg, e.loc.line, e.loc.column);
}

double apply_pow(const Expr& e, double b, int n) {
  if (n < 0 && b == 0.0) domain_fail(e, "division by zero in negative power");
  return std::pow(b, n);
}

double eval_node(const Expr& e, std::span<const double> x) {
  switch (e.kind) {
    case ExprKind::Constant:
      return e.constant;
    case ExprKind::Variable:
      return x[e.variable];
    case ExprKind::Add:
      return eval_node(*e.lhs, x) + eval_node(*e.rhs, x);
    case ExprKind::Sub:
      return eval_node(*e.lhs, x) - eval_node(*e.rhs, x);
    case ExprKind::Mul:
      return eval_node(*e.lhs, x) * eval_node(*e.rhs, x);
    case ExprKind::Div: {
      const double a = eval_node(*e.lhs, x);
      const double b = eval_node(*e.rhs, x);
      if (b == 0.0) domain_fail(e, "division by zero");
      return a / b;
    }
    case ExprKind::Neg:
      return -eval_node(*e.lhs, x);
    case ExprKind::Pow:
      return apply_pow(e, eval_node(*e.lhs, x), e.exponent);
    case ExprKind::Call: {
      const double a = eval_node(*e.lhs, x);
      switch (e.func) {
        case Func::Exp:
          return std::exp(a);
        case Func::Log:
          if (a <= 0.0) domain_fail(e, "log of a nonpositive number");
          return std::log(a);
        case Func::Sin:
          return std::sin(a);
        case Func::Cos:
          return std::cos(a);
        case Func::Sqrt:
          if (a < 0.0) domain_fail(e, "sqrt of a negative number");
          return std::sqrt(a);
      }
    }
  }
  return 0.0;
}

/// Forward-mode evaluation: returns the value and writes d(value)/dx into `d`.
double dual_node(const Expr& e, std::span<const double> x, std::span<double> d) {
  const std::size_t n = d.size();
  switch (e.kind) {
    case ExprKind::Constant:
      std::fill(d.begin(), d.end(), 0.0);
      return e.constant;
    case ExprKind::Variable:
      std::fill(d.begin(), d.end(), 0.0);
      d[e.variable] = 1.0;
      return x[e.variable];
    case ExprKind::Neg: {
      const double a = dual_node(*e.lhs, x, d);
      for (auto& v : d) v = -v;
      return -a;
    }
    case ExprKind::Add:
    case ExprKind::Sub:
    case ExprKind::Mul:
    case ExprKind::Div: {
      const double a = dual_node(*e.lhs, x, d);
      Vector db(n);
      const double b = dual_node(*e.rhs, x, db);
      switch (e.kind) {
        case ExprKind::Add:
          for (std::size_t i = 0; i < n; ++i) d[i] += db[i];
          return a + b;
        case ExprKind::Sub:
          for (std::size_t i = 0; i < n; ++i) d[i] -= db[i];
          return a - b;
        case ExprKind::Mul:
          for (std::size_t i = 0; i < n; ++i) d[i] = d[i] * b + a * db[i];
          return a * b;
        default: {
          if (b == 0.0) domain_fail(e, "division by zero");
          const double q = a / b;
          for (std::size_t i = 0; i < n; ++i) d[i] = (d[i] - q * db[i]) / b;
          return q;
        }
      }
    }
    case ExprKind::Pow: {
      const double b = dual_node(*e.lhs, x, d);
      const int k = e.exponent;
      const double v = apply_pow(e, b, k);
      const double dv = k == 0 ? 0.0 : k * apply_pow(e, b, k - 1);
      for (auto& di : d) di *= dv;
      return v;
    }
    case ExprKind::Call: {
      const double a = dual_node(*e.lhs, x, d);
      double v = 0.0;
      double dv = 0.0;
      switch (e.func) {
        case Func::Exp:
          v = std::exp(a);
          dv = v;
          break;
        case Func::Log:
          if (a <= 0.0) domain_fail(e, "log of a nonpositive number");
          v = std::log(a);
          dv = 1.0 / a;
          break;
        case Func::Sin:
          v = std::sin(a);
          dv = std::cos(a);
          break;
        case Func::Cos:
          v = std::cos(a);
          dv = -std::sin(a);
          break;
        case Func::Sqrt:
          if (a < 0.0) domain_fail(e, "sqrt of a negative number");
          v = std::sqrt(a);
          if (v == 0.0) domain_fail(e, "sqrt is not differentiable at 0");
          dv = 0.5 / v;
          break;
      }
      for (auto& di : d) di *= dv;
      return v;
    }
  }
  return 0.0;
}

void check_arity(const Expr& e, std::span<const double> x) {
  if (expr_arity(e) > x.size()) {
    throw DimensionError("expression references variable " + std::to_string(expr_arity(e)) +
                         " but point has length " + std::to_string(x.size()));
  }
}

}  // namespace

std::size_t expr_arity(const Expr& e) {
  std::size_t a = e.kind == ExprKind::Variable ? e.variable + 1 : 0;
  if (e.lhs) a = std::max(a, expr_arity(*e.lhs));
  if (e.rhs) a = std::max(a, expr_arity(*e.rhs));
  return a;
}

double eval_expr(const Expr& e, std::span<const double> x) {
  check_arity(e, x);
  return eval_node(e, x);
}

double eval_expr_grad(const Expr& e, std::span<const double> x, std::span<double> grad) {
  check_arity(e, x);
  return dual_node(e, x, grad);
}

Vector grad_expr(const Expr& e, std::span<const double> x) {
  Vector g(x.size());
  eval_expr_grad(e, x, g);
  return g;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Add:
    case ExprKind::Sub:
      return 1;
    case ExprKind::Mul:
    case ExprKind::Div:
      return 2;
    case ExprKind::Neg:
      return 3;
    case ExprKind::Pow:
      return 4;
    default:
      return 5;
  }
}

std::string format_constant(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_node(const Expr& e, const std::vector<std::string>& vars, std::string& out);

void print_child(const Expr& child, int min_prec, const std::vector<std::string>& vars,
                 std::string& out) {
  const bool paren = precedence(child) < min_prec;
  if (paren) out += '(';
  print_node(child, vars, out);
  if (paren) out += ')';
}

void print_node(const Expr& e, const std::vector<std::string>& vars, std::string& out) {
  switch (e.kind) {
    case ExprKind::Constant:
      out += format_constant(e.constant);
      return;
    case ExprKind::Variable:
      out += e.variable < vars.size() ? vars[e.variable] : "x" + std::to_string(e.variable + 1);
      return;
    case ExprKind::Add:
    case ExprKind::Sub:
    case ExprKind::Mul:
    case ExprKind::Div: {
      const int p = precedence(e);
      // Left-associative: the right operand needs parentheses at equal precedence.
      print_child(*e.lhs, p, vars, out);
      out += e.kind == ExprKind::Add   ? " + "
             : e.kind == ExprKind::Sub ? " - "
             : e.kind == ExprKind::Mul ? " * "
                                       : " / ";
      print_child(*e.rhs, p + 1, vars, out);
      return;
    }
    case ExprKind::Neg:
      out += '-';
      print_child(*e.lhs, 3, vars, out);
      return;
    case ExprKind::Pow:
      print_child(*e.lhs, 5, vars, out);
      out += '^';
      out += std::to_string(e.exponent);
      return;
    case ExprKind::Call:
      out += to_string(e.func);
      out += '(';
      print_node(*e.lhs, vars, out);
      out += ')';
      return;
  }
}

}  // namespace

std::string print_expr(const Expr& e, const std::vector<std::string>& variables) {
  std::string out;
  print_node(e, variables, out);
  return out;
}

std::string print_problem(const ProblemSource& src) {
  std::ostringstream os;
  os << "vars:";
  for (const auto& v : src.variables) os << ' ' << v;
  os << "\nminimize: " << print_expr(*src.objective, src.variables) << "\nsubject_to:\n";
  for (const auto& g : src.ineq) os << "  ineq: " << print_expr(*g, src.variables) << '\n';
  for (const auto& h : src.eq) os << "  eq: " << print_expr(*h, src.variables) << '\n';
  return os.str();
}

bool expr_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::Constant:
      return a.constant == b.constant;
    case ExprKind::Variable:
      return a.variable == b.variable;
    case ExprKind::Pow:
      if (a.exponent != b.exponent) return false;
      break;
    case ExprKind::Call:
      if (a.func != b.func) return false;
      break;
    default:
      break;
  }
  if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
  if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
  if (a.lhs && !expr_equal(*a.lhs, *b.lhs)) return false;
  if (a.rhs && !expr_equal(*a.rhs, *b.rhs)) return false;
  return true;
}

ProblemSpec to_problem(const ProblemSource& src) {
  const std::size_t n = src.variables.size();
  auto wrap = [n](const ExprPtr& e) -> FunctionPtr { return std::make_shared<ExprFunction>(e, n); };
  std::vector<FunctionPtr> ineq;
  std::vector<FunctionPtr> eq;
  for (const auto& g : src.ineq) ineq.push_back(wrap(g));
  for (const auto& h : src.eq) eq.push_back(wrap(h));
  return ProblemSpec(n, wrap(src.objective), std::move(ineq), std::move(eq), src.variables);
}

}  // namespace expmult
