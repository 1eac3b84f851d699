#include "expmult/inner.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <stdexcept>
#include <string>

#include "expmult/error.hpp"
#include "expmult/kernels.hpp"

namespace expmult {

namespace {

constexpr double kDivergedNorm = 1e10;
constexpr double kDivergedValue = -1e15;
constexpr int kMaxBacktracks = 60;
constexpr double kNoiseUlps = 16.0;
constexpr double kWolfeDelta = 0.1;
// A trial step never exceeds this multiple of 1 + |x|.
constexpr double kMaxStepRatio = 10.0;

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Magnitude of the summands of L, the scale of its rounding error.
double value_scale(const MasterEval& ev) {
  double terms = 0.0;
  for (double t : ev.per_term) terms += t;
  return std::abs(ev.value - terms) + terms;
}

}  // namespace

void validate(const InnerOptions& o) {
  if (!(o.grad_tol > 0.0)) throw std::invalid_argument("grad_tol must be positive");
  if (o.max_iters <= 0) throw std::invalid_argument("max_iters must be positive");
  if (!(o.ls_shrink > 0.0 && o.ls_shrink < 1.0)) {
    throw std::invalid_argument("ls_shrink must lie in (0, 1)");
  }
  if (!(o.armijo_c > 0.0 && o.armijo_c < 1.0)) {
    throw std::invalid_argument("armijo_c must lie in (0, 1)");
  }
  if (!(o.exp_cap > 0.0)) throw std::invalid_argument("exp_cap must be positive");
  if (!(o.regularization >= 0.0)) throw std::invalid_argument("regularization must be >= 0");
}

std::string_view to_string(InnerStatus s) {
  switch (s) {
    case InnerStatus::Converged:
      return "Converged";
    case InnerStatus::MaxIters:
      return "MaxIters";
    case InnerStatus::Diverged:
      return "Diverged";
  }
  return "MaxIters";
}

double safe_exp(double t, double cap) {
  if (t <= cap) return std::exp(t);
  const double d = t - cap;
  return std::exp(cap) * (1.0 + d + 0.5 * d * d);
}

double safe_exp_deriv(double t, double cap) {
  if (t <= cap) return std::exp(t);
  return std::exp(cap) * (1.0 + (t - cap));
}

MasterEval master_eval(const ProblemSpec& p, std::span<const double> y,
                       std::span<const double> x, const InnerOptions& opts) {
  check_point(p, x);
  const std::size_t n = p.dim();
  const std::size_t m = p.num_ineq();
  if (y.size() != m) {
    throw DimensionError("multiplier vector has length " + std::to_string(y.size()) +
                         ", expected " + std::to_string(m));
  }

  MasterEval ev;
  ev.grad.assign(n, 0.0);
  ev.per_term.assign(m, 1.0);
  ev.g.assign(m, 0.0);

  const double fv = p.objective().value_grad(x, ev.grad);
  if (!std::isfinite(fv)) throw EvaluationError("objective is not finite", -1);
  ev.value = fv;
  if (opts.regularization > 0.0) {
    ev.value += 0.5 * opts.regularization * kernels::dot(x, x);
    kernels::axpy(opts.regularization, x, ev.grad);
  }

  Vector gk(n);
  for (std::size_t k = 0; k < m; ++k) {
    const DiffFunction& gfun = *p.ineq()[k];
    const double v = y[k] == 0.0 ? gfun.value(x) : gfun.value_grad(x, gk);
    if (!std::isfinite(v)) {
      throw EvaluationError("constraint " + std::to_string(k + 1) + " is not finite",
                            static_cast<int>(k));
    }
    ev.g[k] = v;
    if (y[k] == 0.0) {
      ev.value += 1.0;
      continue;
    }
    const double t = y[k] * v;
    ev.per_term[k] = safe_exp(t, opts.exp_cap);
    ev.value += ev.per_term[k];
    kernels::axpy(safe_exp_deriv(t, opts.exp_cap) * y[k], gk, ev.grad);
  }
  return ev;
}

InnerResult inner_minimize(const ProblemSpec& p, std::span<const double> y,
                           std::span<const double> x0, const InnerOptions& opts,
                           Vector* inv_hessian) {
  validate(opts);
  const std::size_t n = p.dim();

  InnerResult res;
  res.x_star.assign(x0.begin(), x0.end());
  MasterEval cur = master_eval(p, y, res.x_star, opts);
  if (!std::isfinite(cur.value) || !std::isfinite(inf_norm(cur.grad))) {
    throw EvaluationError("master function is not finite at the starting point", -1);
  }
  res.value_history.push_back(cur.value);
  double gnorm = kernels::norm2(cur.grad);
  res.initial_grad_norm = gnorm;

  // Inverse Hessian approximation, row-major n x n.
  Vector H(n * n, 0.0);
  auto reset_H = [&] {
    std::fill(H.begin(), H.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
  };
  bool scaled = false;
  double alpha_init = std::min(1.0, 1.0 / std::max(inf_norm(cur.grad), 1e-300));
  if (inv_hessian != nullptr && inv_hessian->size() == n * n) {
    H = *inv_hessian;
    scaled = true;
    alpha_init = 1.0;
  } else {
    reset_H();
  }

  Vector d(n), xt(n), s(n), yv(n), Hy(n);
  MasterEval trial;

  auto finish = [&](InnerStatus st) {
    if (inv_hessian != nullptr) *inv_hessian = H;
    res.value = cur.value;
    res.grad_norm = gnorm;
    res.status = st;
    return res;
  };

  for (res.iters = 0; res.iters < opts.max_iters; ++res.iters) {
    if (gnorm <= opts.grad_tol) return finish(InnerStatus::Converged);

    kernels::gemv(H, cur.grad, d);
    for (auto& v : d) v = -v;
    double gd = kernels::dot(cur.grad, d);
    bool steepest = false;
    if (!(gd < 0.0) || !std::isfinite(gd)) {
      reset_H();
      scaled = false;
      for (std::size_t i = 0; i < n; ++i) d[i] = -cur.grad[i];
      gd = -gnorm * gnorm;
      steepest = true;
      alpha_init = std::min(1.0, 1.0 / std::max(inf_norm(cur.grad), 1e-300));
    }

    // Backtracking line search. Near the minimizer the Armijo decrease falls
    // below the rounding level of L, so two more tests accept a step:
    // approximate Wolfe (Hager-Zhang), which reads the decrease off the
    // directional derivatives while L moves by no more than its rounding
    // noise, and a step that keeps L and strictly reduces the gradient norm.
    const double noise = kNoiseUlps * DBL_EPSILON * value_scale(cur);
    const double max_step = kMaxStepRatio * (1.0 + kernels::norm2(res.x_star));
    double alpha = std::min(alpha_init, max_step / kernels::norm2(d));
    const double alpha_start = alpha;
    bool accepted = false;
    double trial_gnorm = 0.0;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      for (int bt = 0; bt < kMaxBacktracks; ++bt) {
        for (std::size_t i = 0; i < n; ++i) xt[i] = res.x_star[i] + alpha * d[i];
        bool ok = true;
        try {
          trial = master_eval(p, y, xt, opts);
        } catch (const Error&) {
          ok = false;
        }
        if (ok && std::isfinite(trial.value)) {
          trial_gnorm = kernels::norm2(trial.grad);
          const bool armijo = trial.value <= cur.value + opts.armijo_c * alpha * gd;
          const bool flat = trial.value <= cur.value && trial_gnorm < gnorm;
          const bool approx_wolfe = trial.value <= cur.value + noise &&
                                    kernels::dot(trial.grad, d) <= (2 * kWolfeDelta - 1) * gd;
          if (std::isfinite(trial_gnorm) && (armijo || flat || approx_wolfe)) {
            accepted = true;
            break;
          }
        }
        alpha *= opts.ls_shrink;
      }
      if (!accepted) {
        if (steepest) break;
        // Retry along the negative gradient with a fresh inverse Hessian.
        reset_H();
        scaled = false;
        for (std::size_t i = 0; i < n; ++i) d[i] = -cur.grad[i];
        gd = -gnorm * gnorm;
        steepest = true;
        alpha = std::min({1.0, 1.0 / std::max(inf_norm(cur.grad), 1e-300),
                          max_step / kernels::norm2(d)});
      }
    }
    if (!accepted) {
      // No descent possible at working precision.
      return finish(InnerStatus::MaxIters);
    }

    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xt[i] - res.x_star[i];
      yv[i] = trial.grad[i] - cur.grad[i];
    }
    const bool first_try = alpha == alpha_start;
    res.x_star = xt;
    std::swap(cur, trial);
    gnorm = trial_gnorm;
    res.value_history.push_back(cur.value);

    if (kernels::norm2(res.x_star) > kDivergedNorm || cur.value <= kDivergedValue) {
      ++res.iters;
      return finish(InnerStatus::Diverged);
    }

    const double sy = kernels::dot(s, yv);
    const double yy = kernels::dot(yv, yv);
    const double ss = kernels::dot(s, s);
    if (sy > 1e-12 * std::sqrt(ss * yy) && sy > 0.0 && std::isfinite(sy)) {
      if (!scaled) {
        const double gamma = sy / yy;
        std::fill(H.begin(), H.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) H[i * n + i] = gamma;
        scaled = true;
      }
      kernels::gemv(H, yv, Hy);
      const double rho = 1.0 / sy;
      const double yHy = kernels::dot(yv, Hy);
      kernels::sym_rank2_update(H, s, Hy, rho * rho * yHy + rho, -rho);
      alpha_init = 1.0;
    } else {
      // No usable curvature: the master function looks linear along s. Grow
      // the trial step so unbounded directions are detected quickly.
      alpha_init = alpha * (first_try ? 4.0 : 2.0);
    }
  }
  if (gnorm <= opts.grad_tol) return finish(InnerStatus::Converged);
  return finish(InnerStatus::MaxIters);
}

}  // namespace expmult
