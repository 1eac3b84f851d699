#include "expmult/problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "expmult/error.hpp"
#include "expmult/kernels.hpp"

namespace expmult {

double AffineFunction::value(std::span<const double> x) const {
  return kernels::dot(a_, x) + c_;
}

double AffineFunction::value_grad(std::span<const double> x, std::span<double> grad) const {
  std::copy(a_.begin(), a_.end(), grad.begin());
  return value(x);
}

DiagQuadratic::DiagQuadratic(Vector weights, Vector center, double c)
    : w_(std::move(weights)), center_(std::move(center)), c_(c) {
  if (w_.size() != center_.size()) {
    throw DimensionError("DiagQuadratic: weights and center differ in length");
  }
}

double DiagQuadratic::value(std::span<const double> x) const {
  double s = c_;
  for (std::size_t i = 0; i < w_.size(); ++i) {
    const double d = x[i] - center_[i];
    s += 0.5 * w_[i] * d * d;
  }
  return s;
}

double DiagQuadratic::value_grad(std::span<const double> x, std::span<double> grad) const {
  for (std::size_t i = 0; i < w_.size(); ++i) {
    grad[i] = w_[i] * (x[i] - center_[i]);
  }
  return value(x);
}

namespace {

/// (1/2) h(x)^2
class HalfSquare final : public DiffFunction {
 public:
  explicit HalfSquare(FunctionPtr h) : h_(std::move(h)) {}
  std::size_t dim() const override { return h_->dim(); }
  double value(std::span<const double> x) const override {
    const double v = h_->value(x);
    return 0.5 * v * v;
  }
  double value_grad(std::span<const double> x, std::span<double> grad) const override {
    const double v = h_->value_grad(x, grad);
    for (auto& gi : grad) gi *= v;
    return 0.5 * v * v;
  }

 private:
  FunctionPtr h_;
};

/// (1/2) sum_i h_i(x)^2
class HalfSquaredNorm final : public DiffFunction {
 public:
  HalfSquaredNorm(std::vector<FunctionPtr> hs, std::size_t n) : hs_(std::move(hs)), n_(n) {}
  std::size_t dim() const override { return n_; }
  double value(std::span<const double> x) const override {
    double s = 0.0;
    for (const auto& h : hs_) {
      const double v = h->value(x);
      s += 0.5 * v * v;
    }
    return s;
  }
  double value_grad(std::span<const double> x, std::span<double> grad) const override {
    std::fill(grad.begin(), grad.end(), 0.0);
    Vector gh(n_);
    double s = 0.0;
    for (const auto& h : hs_) {
      const double v = h->value_grad(x, gh);
      s += 0.5 * v * v;
      kernels::axpy(v, gh, grad);
    }
    return s;
  }

 private:
  std::vector<FunctionPtr> hs_;
  std::size_t n_;
};

class Negated final : public DiffFunction {
 public:
  explicit Negated(FunctionPtr h) : h_(std::move(h)) {}
  std::size_t dim() const override { return h_->dim(); }
  double value(std::span<const double> x) const override { return -h_->value(x); }
  double value_grad(std::span<const double> x, std::span<double> grad) const override {
    const double v = h_->value_grad(x, grad);
    for (auto& gi : grad) gi = -gi;
    return -v;
  }

 private:
  FunctionPtr h_;
};

}  // namespace

std::string_view to_string(EqMode mode) {
  switch (mode) {
    case EqMode::SquareEach:
      return "square";
    case EqMode::SquareAggregate:
      return "aggregate";
    case EqMode::Pair:
      return "pair";
  }
  return "square";
}

std::optional<EqMode> eq_mode_from_string(std::string_view s) {
  if (s == "square" || s == "square-each") return EqMode::SquareEach;
  if (s == "aggregate" || s == "square-aggregate") return EqMode::SquareAggregate;
  if (s == "pair") return EqMode::Pair;
  return std::nullopt;
}

ProblemSpec::ProblemSpec(std::size_t dim_x, FunctionPtr objective, std::vector<FunctionPtr> ineq,
                         std::vector<FunctionPtr> eq, std::vector<std::string> names)
    : dim_x_(dim_x),
      objective_(std::move(objective)),
      ineq_(std::move(ineq)),
      eq_(std::move(eq)),
      names_(std::move(names)) {
  if (dim_x_ == 0) {
    throw DimensionError("problem must have at least one variable");
  }
  if (!objective_) {
    throw DimensionError("problem has no objective");
  }
  auto check = [&](const FunctionPtr& f, const char* what) {
    if (!f || f->dim() != dim_x_) {
      throw DimensionError(std::string(what) + " function dimension does not match dim_x = " +
                           std::to_string(dim_x_));
    }
  };
  check(objective_, "objective");
  for (const auto& g : ineq_) check(g, "inequality");
  for (const auto& h : eq_) check(h, "equality");
  if (!names_.empty() && names_.size() != dim_x_) {
    throw DimensionError("variable name count does not match dim_x");
  }
}

ProblemSpec transform_equalities(const ProblemSpec& p, EqMode mode) {
  if (p.eq().empty()) {
    return p;
  }
  std::vector<FunctionPtr> ineq = p.ineq();
  switch (mode) {
    case EqMode::SquareEach:
      for (const auto& h : p.eq()) ineq.push_back(std::make_shared<HalfSquare>(h));
      break;
    case EqMode::SquareAggregate:
      ineq.push_back(std::make_shared<HalfSquaredNorm>(p.eq(), p.dim()));
      break;
    case EqMode::Pair:
      for (const auto& h : p.eq()) {
        ineq.push_back(h);
        ineq.push_back(std::make_shared<Negated>(h));
      }
      break;
  }
  return ProblemSpec(p.dim(), p.objective_ptr(), std::move(ineq), {}, p.names());
}

void check_point(const ProblemSpec& p, std::span<const double> x) {
  if (x.size() != p.dim()) {
    throw DimensionError("point has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(p.dim()));
  }
}

Vector eval_constraints(const ProblemSpec& p, std::span<const double> x) {
  check_point(p, x);
  Vector g(p.num_ineq());
  for (std::size_t k = 0; k < g.size(); ++k) {
    g[k] = p.ineq()[k]->value(x);
    if (!std::isfinite(g[k])) {
      throw EvaluationError("constraint " + std::to_string(k + 1) + " is not finite",
                            static_cast<int>(k));
    }
  }
  return g;
}

KktResidual kkt_residual(const ProblemSpec& p, std::span<const double> x,
                         std::span<const double> y) {
  check_point(p, x);
  if (y.size() != p.num_ineq()) {
    throw DimensionError("multiplier vector has length " + std::to_string(y.size()) +
                         ", expected " + std::to_string(p.num_ineq()));
  }
  const std::size_t n = p.dim();
  Vector grad(n);
  Vector gk(n);
  p.objective().value_grad(x, grad);

  KktResidual r;
  bool first = true;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double v = p.ineq()[k]->value_grad(x, gk);
    kernels::axpy(y[k], gk, grad);
    r.feasibility = first ? v : std::max(r.feasibility, v);
    r.complementarity = std::max(r.complementarity, std::abs(y[k] * v));
    r.dual_feasibility = std::max(r.dual_feasibility, -y[k]);
    first = false;
  }
  r.stationarity = kernels::norm2(grad);
  return r;
}

}  // namespace expmult
