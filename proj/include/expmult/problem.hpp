#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace expmult {

using Vector = std::vector<double>;

/**
 * A smooth scalar function over R^N exposing its value and gradient.
 *
 * Implementations are immutable and must be safe to call concurrently.
 */
class DiffFunction {
 public:
  virtual ~DiffFunction() = default;

  virtual std::size_t dim() const = 0;

  virtual double value(std::span<const double> x) const = 0;

  /// Writes the gradient into `grad` (size dim()) and returns the value.
  virtual double value_grad(std::span<const double> x, std::span<double> grad) const = 0;
};

using FunctionPtr = std::shared_ptr<const DiffFunction>;

/// a . x + c
class AffineFunction final : public DiffFunction {
 public:
  AffineFunction(Vector a, double c) : a_(std::move(a)), c_(c) {}
  std::size_t dim() const override { return a_.size(); }
  double value(std::span<const double> x) const override;
  double value_grad(std::span<const double> x, std::span<double> grad) const override;
  const Vector& coefficients() const { return a_; }
  double offset() const { return c_; }

 private:
  Vector a_;
  double c_;
};

/// (1/2) |x - center|_W^2 + c with a diagonal weight W.
class DiagQuadratic final : public DiffFunction {
 public:
  DiagQuadratic(Vector weights, Vector center, double c = 0.0);
  std::size_t dim() const override { return w_.size(); }
  double value(std::span<const double> x) const override;
  double value_grad(std::span<const double> x, std::span<double> grad) const override;

 private:
  Vector w_;
  Vector center_;
  double c_;
};

/// Scalar function assembled from two callables; handy for tests and the corpus.
class LambdaFunction final : public DiffFunction {
 public:
  using ValueFn = std::function<double(std::span<const double>)>;
  using GradFn = std::function<void(std::span<const double>, std::span<double>)>;
  LambdaFunction(std::size_t n, ValueFn f, GradFn g)
      : n_(n), f_(std::move(f)), g_(std::move(g)) {}
  std::size_t dim() const override { return n_; }
  double value(std::span<const double> x) const override { return f_(x); }
  double value_grad(std::span<const double> x, std::span<double> grad) const override {
    g_(x, grad);
    return f_(x);
  }

 private:
  std::size_t n_;
  ValueFn f_;
  GradFn g_;
};

/// How equality constraints h_i(x) = 0 are rewritten as inequalities.
enum class EqMode {
  SquareEach,       ///< one (1/2) h_i^2 <= 0 per equality
  SquareAggregate,  ///< a single (1/2) |h|^2 <= 0
  Pair,             ///< h_i <= 0 and -h_i <= 0
};

std::string_view to_string(EqMode mode);
std::optional<EqMode> eq_mode_from_string(std::string_view s);

/**
 * minimize f(x) subject to g_k(x) <= 0 and h_i(x) = 0.
 *
 * Immutable after construction; the constructor checks that every function
 * has dimension dim_x.
 */
class ProblemSpec {
 public:
  ProblemSpec(std::size_t dim_x, FunctionPtr objective, std::vector<FunctionPtr> ineq = {},
              std::vector<FunctionPtr> eq = {}, std::vector<std::string> names = {});

  std::size_t dim() const { return dim_x_; }
  std::size_t num_ineq() const { return ineq_.size(); }
  std::size_t num_eq() const { return eq_.size(); }
  const DiffFunction& objective() const { return *objective_; }
  const FunctionPtr& objective_ptr() const { return objective_; }
  const std::vector<FunctionPtr>& ineq() const { return ineq_; }
  const std::vector<FunctionPtr>& eq() const { return eq_; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::size_t dim_x_;
  FunctionPtr objective_;
  std::vector<FunctionPtr> ineq_;
  std::vector<FunctionPtr> eq_;
  std::vector<std::string> names_;
};

struct KktResidual {
  double stationarity = 0.0;      ///< |grad f + sum y_k grad g_k|_2
  double feasibility = 0.0;       ///< max_k g_k(x); 0 when there are no constraints
  double complementarity = 0.0;   ///< max_k |y_k g_k(x)|
  double dual_feasibility = 0.0;  ///< max(0, -min_k y_k)
};

/// Rewrites the equality constraints as inequalities appended after the
/// existing ones. The result has no equality constraints.
ProblemSpec transform_equalities(const ProblemSpec& p, EqMode mode = EqMode::SquareEach);

/// (g_1(x), ..., g_m(x)). Throws DimensionError or EvaluationError.
Vector eval_constraints(const ProblemSpec& p, std::span<const double> x);

KktResidual kkt_residual(const ProblemSpec& p, std::span<const double> x,
                         std::span<const double> y);

/// Throws DimensionError unless x.size() == p.dim().
void check_point(const ProblemSpec& p, std::span<const double> x);

}  // namespace expmult
