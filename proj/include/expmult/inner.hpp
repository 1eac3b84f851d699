#pragma once

#include <span>

#include "expmult/problem.hpp"

namespace expmult {

struct InnerOptions {
  double grad_tol = 1e-10;  ///< stop when |grad_x L| <= grad_tol
  int max_iters = 500;
  double ls_shrink = 0.5;   ///< backtracking factor
  double armijo_c = 1e-4;
  double exp_cap = 30.0;    ///< exponent T past which safe_exp switches to its quadratic tail
  double regularization = 0.0;  ///< adds (eps/2)|x|^2 to the objective when > 0
};

/// Throws std::invalid_argument when a field is outside its documented range.
void validate(const InnerOptions& opts);

/// e^t for t <= T, and e^T (1 + (t - T) + (t - T)^2 / 2) beyond: a C^2, convex,
/// strictly increasing continuation that cannot overflow for moderate t.
double safe_exp(double t, double cap);

/// Derivative of safe_exp with respect to t.
double safe_exp_deriv(double t, double cap);

struct MasterEval {
  double value = 0.0;  ///< L(x, y) = f(x) + sum_k safe_exp(y_k g_k(x))
  Vector grad;         ///< grad_x L
  Vector per_term;     ///< safe_exp(y_k g_k(x)), one per constraint
  Vector g;            ///< g_k(x)
};

/// Evaluates the master function and its x-gradient. A constraint with
/// y_k = 0 contributes the constant 1 to the value and nothing to the
/// gradient. Throws EvaluationError on a non-finite objective or constraint.
MasterEval master_eval(const ProblemSpec& p, std::span<const double> y,
                       std::span<const double> x, const InnerOptions& opts);

enum class InnerStatus { Converged, MaxIters, Diverged };

std::string_view to_string(InnerStatus s);

struct InnerResult {
  Vector x_star;
  double value = 0.0;
  double grad_norm = 0.0;
  double initial_grad_norm = 0.0;
  int iters = 0;
  InnerStatus status = InnerStatus::MaxIters;
  /// Master-function values at every accepted iterate, starting with x0.
  std::vector<double> value_history;
};

/// Minimizes L(., y) from x0 with BFGS and Armijo backtracking, falling back
/// to steepest descent when the quasi-Newton direction is not a descent
/// direction. Diverged means the iterates escaped (|x| > 1e10 or L <= -1e15),
/// the signature of a master function that is not coercive.
///
/// When `inv_hessian` is non-null it carries the BFGS inverse-Hessian
/// approximation (row-major N x N) in and out, so consecutive outer
/// iterations reuse curvature the way they reuse x. An empty or mis-sized
/// matrix starts from the identity.
InnerResult inner_minimize(const ProblemSpec& p, std::span<const double> y,
                           std::span<const double> x0, const InnerOptions& opts,
                           Vector* inv_hessian = nullptr);

}  // namespace expmult
