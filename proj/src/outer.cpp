#include "expmult/outer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "expmult/error.hpp"

namespace expmult {

namespace {

// Multipliers past this are no longer meaningful; the run is abandoned.
constexpr double kMultiplierOverflow = 1e300;
constexpr double kFrozenStep = 1e-8;
constexpr int kFrozenWindow = 5;
constexpr int kStuckInnerLimit = 3;
// An inner solve ending below this gradient norm is close enough to
// stationary that failing to improve on its warm start is not a stall.
constexpr double kNearStationary = 1e-6;
// Stall acceleration. A shrink needs |g| past the gap, g settled to the
// relative tolerance over the window, and x settled to the relative motion
// bound. A boost needs a violation past the floor, or any violation when the
// constraint has never been slack (overshooting into the interior is then
// impossible), and starts at the base factor, doubling per consecutive boost up to the cap.
constexpr double kShrinkGap = 1e-4;
constexpr double kSettledTol = 1e-3;
constexpr double kSettledMotion = 1e-3;
constexpr double kProportionalTol = 0.1;
constexpr double kBoostFloor = 1e-6;
constexpr double kBoostBase = 2.0;
constexpr double kBoostCap = 16.0;
// Boosts stop at this multiple of y_cap: enough headroom for the products of
// a diverging multiplier to drop below tolerance, without the conditioning
// loss of letting y run away.
constexpr double kBoostCeiling = 10.0;

Vector broadcast(const Vector& v, std::size_t n, double fill, const char* what) {
  if (v.empty()) return Vector(n, fill);
  if (v.size() == 1) return Vector(n, v[0]);
  if (v.size() != n) {
    throw DimensionError(std::string(what) + " has length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(n));
  }
  return v;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

/// True when constraint k has kept the same strict sign over the last
/// window+1 rows while |y_k g_k| shrank by less than the stall ratio per
/// step: the signature of the sublinear regimes of the update rule.
bool stalled(const std::vector<TracePoint>& trace, std::size_t k, int window,
             const OuterConfig& cfg) {
  const std::size_t w = static_cast<std::size_t>(window);
  if (trace.size() < w + 1) return false;
  const std::size_t last = trace.size() - 1;
  const int s = sign(trace[last].g_vals[k]);
  if (s == 0) return false;
  for (std::size_t i = last + 1 - w; i <= last; ++i) {
    const double p = trace[i].products[k];
    const double q = trace[i - 1].products[k];
    if (sign(trace[i].g_vals[k]) != s || sign(trace[i - 1].g_vals[k]) != s) return false;
    if (q == 0.0 || p == 0.0) return false;
    if (std::abs(p) < cfg.stall_ratio * std::abs(q)) return false;
  }
  return true;
}

/// True when the stall of constraint k comes from its multiplier decaying
/// rather than from g_k closing in on zero: g_k has settled over the window,
/// sits clear of zero, and moved by a smaller relative amount than y_k.
bool multiplier_driven(const std::vector<TracePoint>& trace, std::size_t k, int window) {
  const std::size_t last = trace.size() - 1;
  const std::size_t first = last - static_cast<std::size_t>(window);
  const double y = trace[last].y[k];
  const double g = trace[last].g_vals[k];
  if (std::abs(g) < kShrinkGap) return false;
  double spread = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    spread = std::max(spread, std::abs(trace[i].g_vals[k] - g));
  }
  if (spread > kSettledTol * std::abs(g)) return false;
  const double dy = std::abs(std::log(y / trace[first].y[k]));
  const double dg = std::abs(std::log(g / trace[first].g_vals[k]));
  return dg <= dy;
}

/// True when g_k and y_k decay toward zero together at a matching relative
/// rate: a constraint that is active with a vanishing multiplier, where x
/// follows y and never settles.
bool proportional_decay(const std::vector<TracePoint>& trace, std::size_t k, int window) {
  const std::size_t last = trace.size() - 1;
  const std::size_t first = last - static_cast<std::size_t>(window);
  for (std::size_t i = first + 1; i <= last; ++i) {
    if (!(std::abs(trace[i].g_vals[k]) < std::abs(trace[i - 1].g_vals[k]))) return false;
    if (!(trace[i].y[k] < trace[i - 1].y[k])) return false;
  }
  const double dy = std::log(trace[first].y[k] / trace[last].y[k]);
  const double dg = std::log(trace[first].g_vals[k] / trace[last].g_vals[k]);
  return dy > 0.0 && std::abs(dg - dy) <= kProportionalTol * dy;
}

double inf_dist(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Largest infinity-norm distance from x to the iterates of the last w rows.
double recent_motion(const std::vector<TracePoint>& trace, std::size_t w) {
  if (trace.size() <= w) return std::numeric_limits<double>::infinity();
  const Vector& x = trace.back().x;
  double m = 0.0;
  for (std::size_t i = trace.size() - 1 - w; i < trace.size(); ++i) {
    m = std::max(m, inf_dist(trace[i].x, x));
  }
  return m;
}

}  // namespace

void validate(const OuterConfig& c) {
  if (!(c.tol_comp > 0.0)) throw std::invalid_argument("tol_comp must be positive");
  if (!(c.tol_feas > 0.0)) throw std::invalid_argument("tol_feas must be positive");
  if (c.max_outer <= 0) throw std::invalid_argument("max_outer must be positive");
  if (!(c.y_cap > 0.0)) throw std::invalid_argument("y_cap must be positive");
  if (!(c.omega > 0.0 && c.omega <= 1.0)) throw std::invalid_argument("omega must lie in (0, 1]");
  for (double v : c.y0) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("initial multipliers must be finite and strictly positive");
    }
  }
  for (double v : c.x0) {
    if (!std::isfinite(v)) throw std::invalid_argument("x0 must be finite");
  }
  if (c.stall_window < 1) throw std::invalid_argument("stall_window must be >= 1");
  if (!(c.stall_ratio > 0.0 && c.stall_ratio < 1.0)) {
    throw std::invalid_argument("stall_ratio must lie in (0, 1)");
  }
  if (!(c.stall_shrink > 0.0 && c.stall_shrink < 1.0)) {
    throw std::invalid_argument("stall_shrink must lie in (0, 1)");
  }
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged:
      return "Converged";
    case SolveStatus::ConvergedDivergingMultipliers:
      return "ConvergedDivergingMultipliers";
    case SolveStatus::MaxIterations:
      return "MaxIterations";
    case SolveStatus::InnerFailure:
      return "InnerFailure";
    case SolveStatus::NotCoercive:
      return "NotCoercive";
  }
  return "MaxIterations";
}

std::optional<SolveStatus> solve_status_from_string(std::string_view s) {
  for (auto st : {SolveStatus::Converged, SolveStatus::ConvergedDivergingMultipliers,
                  SolveStatus::MaxIterations, SolveStatus::InnerFailure,
                  SolveStatus::NotCoercive}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

Vector multiplier_update(std::span<const double> y, std::span<const double> g_vals,
                         double omega, double exp_cap) {
  if (y.size() != g_vals.size()) {
    throw DimensionError("multiplier and constraint vectors differ in length");
  }
  Vector out(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (y[k] == 0.0) {
      out[k] = 0.0;
      continue;
    }
    // A positive multiplier never underflows to the absorbing value zero.
    out[k] = std::max(y[k] * safe_exp(omega * y[k] * g_vals[k], exp_cap),
                      std::numeric_limits<double>::min());
  }
  return out;
}

MapResult map_G(const ProblemSpec& p, std::span<const double> y, std::span<const double> x_warm,
                const InnerOptions& opts) {
  MapResult r;
  r.inner = inner_minimize(p, y, x_warm, opts);
  r.x_of_y = r.inner.x_star;
  if (r.inner.status == InnerStatus::Diverged) {
    r.coercive = false;
    return r;
  }
  r.g_vals = eval_constraints(p, r.x_of_y);
  r.Gy = multiplier_update(y, r.g_vals, 1.0, opts.exp_cap);
  return r;
}

std::optional<SolveStatus> classify_termination(const std::vector<TracePoint>& trace,
                                                const OuterConfig& cfg) {
  if (trace.empty()) throw std::invalid_argument("classify_termination needs a nonempty trace");
  const TracePoint& last = trace.back();
  const double comp = max_abs(last.products);
  double feas = 0.0;
  bool first = true;
  for (double g : last.g_vals) {
    feas = first ? g : std::max(feas, g);
    first = false;
  }
  const bool any_capped =
      std::any_of(last.y.begin(), last.y.end(), [&](double v) { return v >= cfg.y_cap; });

  if (comp <= cfg.tol_comp && feas <= cfg.tol_feas && !any_capped) {
    return SolveStatus::Converged;
  }
  if (comp <= cfg.tol_comp && any_capped &&
      trace.size() > static_cast<std::size_t>(kFrozenWindow)) {
    bool frozen = true;
    for (std::size_t i = trace.size() - kFrozenWindow; i < trace.size(); ++i) {
      if (inf_dist(trace[i].x, trace[i - 1].x) > kFrozenStep) {
        frozen = false;
        break;
      }
    }
    if (frozen) return SolveStatus::ConvergedDivergingMultipliers;
  }
  if (trace.size() >= static_cast<std::size_t>(cfg.max_outer)) {
    return SolveStatus::MaxIterations;
  }
  return std::nullopt;
}

SolveReport solve(const ProblemSpec& p, const OuterConfig& cfg, const InnerOptions& opts) {
  validate(cfg);
  validate(opts);
  if (p.num_eq() != 0) {
    throw std::invalid_argument("solve expects an inequality-only problem; transform equalities first");
  }
  const std::size_t n = p.dim();
  const std::size_t m = p.num_ineq();

  Vector y = broadcast(cfg.y0, m, 1.0, "y0");
  Vector x = broadcast(cfg.x0, n, 0.0, "x0");

  SolveReport rep;
  if (cfg.omega < 1.0) {
    rep.warnings.push_back("relaxed update in use (omega = " + std::to_string(cfg.omega) + ")");
  }

  // Stall handling state. A shrunk constraint remembers the multiplier it
  // had before its first shrink, so a later violation can restore it.
  std::vector<bool> shrunk(m, false);
  Vector boost(m, kBoostBase);
  std::vector<bool> seen_slack(m, false);
  std::vector<int> window(m, cfg.stall_window);
  Vector saved(m, 0.0);
  std::vector<std::size_t> just_shrunk;
  auto restore = [&](std::size_t k) {
    y[k] = saved[k];
    shrunk[k] = false;
    window[k] *= 2;
  };
  int inexact_inner = 0;
  int stuck_inner = 0;
  std::optional<SolveStatus> status;
  Vector inv_hessian;

  while (!status) {
    InnerResult inner;
    try {
      inner = inner_minimize(p, y, x, opts, &inv_hessian);
    } catch (const Error& e) {
      rep.warnings.push_back(std::string("inner solve failed: ") + e.what());
      status = SolveStatus::InnerFailure;
      break;
    }

    if (inner.status == InnerStatus::Diverged) {
      if (!just_shrunk.empty()) {
        // Weakening these barriers let the iterates escape; undo it.
        for (std::size_t k : just_shrunk) restore(k);
        just_shrunk.clear();
        ++rep.stall_restores;
        continue;
      }
      x = inner.x_star;
      status = SolveStatus::NotCoercive;
      break;
    }
    if (inner.status == InnerStatus::MaxIters) {
      const bool progress =
          inner.grad_norm < inner.initial_grad_norm || inner.grad_norm <= kNearStationary;
      stuck_inner = progress ? 0 : stuck_inner + 1;
      if (stuck_inner >= kStuckInnerLimit) {
        rep.warnings.push_back("inner solve made no progress in " +
                               std::to_string(kStuckInnerLimit) + " consecutive outer iterations");
        x = inner.x_star;
        status = SolveStatus::InnerFailure;
        break;
      }
      ++inexact_inner;
    } else {
      stuck_inner = 0;
    }
    just_shrunk.clear();

    TracePoint tp;
    tp.iter = static_cast<int>(rep.trace.size());
    tp.x = inner.x_star;
    tp.y = y;
    tp.g_vals = eval_constraints(p, inner.x_star);
    tp.products.resize(m);
    for (std::size_t k = 0; k < m; ++k) tp.products[k] = y[k] * tp.g_vals[k];
    tp.L_value = inner.value;
    tp.inner_iters = inner.iters;
    tp.inner_grad_norm = inner.grad_norm;
    if (!rep.trace.empty() && tp.L_value > rep.trace.back().L_value) ++rep.valley_jumps;
    rep.trace.push_back(std::move(tp));
    x = inner.x_star;

    status = classify_termination(rep.trace, cfg);
    if (status) break;

    const TracePoint& last = rep.trace.back();
    Vector y_next = multiplier_update(y, last.g_vals, cfg.omega, opts.exp_cap);

    if (cfg.accelerate) {
      std::vector<std::size_t> vanishing;
      for (std::size_t k = 0; k < m; ++k) {
        const double gk = last.g_vals[k];
        if (gk < -cfg.tol_feas) seen_slack[k] = true;
        if (rep.trace.size() >= 2) {
          const int s0 = sign(rep.trace[rep.trace.size() - 2].g_vals[k]);
          const int s1 = sign(gk);
          if (s0 != 0 && s1 != 0 && s0 != s1) boost[k] = kBoostBase;
        }
        if (shrunk[k] && gk > cfg.tol_feas) {
          y_next[k] = std::max(y_next[k], saved[k]);
          shrunk[k] = false;
          window[k] *= 2;
          ++rep.stall_restores;
          continue;
        }
        if (y[k] == 0.0 || !stalled(rep.trace, k, window[k], cfg)) continue;
        if (gk < -cfg.tol_feas && std::abs(last.products[k]) > cfg.tol_comp) {
          if (multiplier_driven(rep.trace, k, window[k])) {
            just_shrunk.push_back(k);
          } else if (proportional_decay(rep.trace, k, window[k])) {
            vanishing.push_back(k);
          }
        } else if (seen_slack[k] ? gk > std::max(cfg.tol_feas, kBoostFloor) : gk > 0.0) {
          y_next[k] = std::max(y_next[k],
                               std::min(y_next[k] * boost[k], kBoostCeiling * cfg.y_cap));
          boost[k] = std::min(2.0 * boost[k], kBoostCap);
        }
      }
      double scale = 1.0;
      for (double v : last.x) scale = std::max(scale, std::abs(v));
      if (recent_motion(rep.trace, static_cast<std::size_t>(cfg.stall_window)) >
          kSettledMotion * scale) {
        just_shrunk.clear();
      }
      if (!just_shrunk.empty()) {
        // Shrink every other slack constraint whose multiplier is already
        // below its slack, so the barriers weaken together.
        for (std::size_t k = 0; k < m; ++k) {
          const double gk = last.g_vals[k];
          if (std::find(just_shrunk.begin(), just_shrunk.end(), k) != just_shrunk.end()) continue;
          if (gk < -cfg.tol_feas && std::abs(last.products[k]) > cfg.tol_comp && y[k] < -gk) {
            just_shrunk.push_back(k);
          }
        }
      }
      just_shrunk.insert(just_shrunk.end(), vanishing.begin(), vanishing.end());
      for (std::size_t k : just_shrunk) {
        if (!shrunk[k]) saved[k] = y[k];
        shrunk[k] = true;
        y_next[k] *= cfg.stall_shrink;
      }
    }

    for (double v : y_next) {
      if (!std::isfinite(v) || v > kMultiplierOverflow) {
        rep.warnings.push_back("multiplier overflow; giving up");
        status = SolveStatus::MaxIterations;
        break;
      }
    }
    y = std::move(y_next);
  }

  rep.status = *status;
  if (!rep.trace.empty()) {
    rep.x_star = rep.trace.back().x;
    rep.y_star = rep.trace.back().y;
  } else {
    rep.x_star = x;
    rep.y_star = y;
  }
  if (inexact_inner > 0) {
    rep.warnings.push_back(std::to_string(inexact_inner) +
                           " inner solve(s) stopped short of grad_tol; continued from warm start");
  }
  try {
    rep.kkt = kkt_residual(p, rep.x_star, rep.y_star);
    rep.objective = p.objective().value(rep.x_star);
  } catch (const Error& e) {
    rep.warnings.push_back(std::string("final evaluation failed: ") + e.what());
    rep.objective = std::nan("");
  }
  return rep;
}

ScanResult scan_1d(const ProblemSpec& p, double y_min, double y_max, int steps,
                   const InnerOptions& opts, std::span<const double> x0) {
  if (p.num_ineq() != 1 || p.num_eq() != 0) {
    throw std::invalid_argument("scan_1d needs exactly one inequality constraint");
  }
  if (!(y_min > 0.0) || !(y_max > y_min)) {
    throw std::invalid_argument("scan_1d needs 0 < y_min < y_max");
  }
  if (steps < 1) throw std::invalid_argument("scan_1d needs at least one grid point");

  ScanResult out;
  Vector x = x0.empty() ? Vector(p.dim(), 0.0) : Vector(x0.begin(), x0.end());
  check_point(p, x);
  for (int i = 0; i < steps; ++i) {
    const double yv = steps == 1 ? y_min : y_min + (y_max - y_min) * i / (steps - 1);
    const double yarr[1] = {yv};
    MapResult r;
    try {
      r = map_G(p, yarr, x, opts);
    } catch (const Error& e) {
      out.complete = false;
      out.error = e.what();
      return out;
    }
    if (!r.coercive || (r.inner.status == InnerStatus::MaxIters &&
                        !(r.inner.grad_norm < r.inner.initial_grad_norm) &&
                        r.inner.grad_norm > opts.grad_tol)) {
      out.complete = false;
      out.error = "inner solve failed at y = " + std::to_string(yv);
      return out;
    }
    out.rows.push_back({yv, r.x_of_y, r.g_vals[0], r.Gy[0]});
    x = r.x_of_y;
  }
  return out;
}

ProbeReport well_balanced_probe(const ProblemSpec& p, double y_large, const InnerOptions& opts,
                                std::span<const double> x0, double feas_tol) {
  if (p.num_eq() != 0) {
    throw std::invalid_argument("well_balanced_probe expects an inequality-only problem");
  }
  if (!(y_large > 0.0)) throw std::invalid_argument("y_large must be positive");
  ProbeReport rep;
  if (p.num_ineq() == 0) return rep;

  const Vector y(p.num_ineq(), y_large);
  const Vector x = x0.empty() ? Vector(p.dim(), 0.0) : Vector(x0.begin(), x0.end());
  const InnerResult inner = inner_minimize(p, y, x, opts);
  rep.inner_status = inner.status;
  rep.x = inner.x_star;
  if (inner.status == InnerStatus::Diverged) {
    rep.passes = false;
    return rep;
  }
  rep.g_vals = eval_constraints(p, inner.x_star);
  rep.violated.resize(rep.g_vals.size());
  for (std::size_t k = 0; k < rep.g_vals.size(); ++k) {
    rep.violated[k] = rep.g_vals[k] > feas_tol;
    if (rep.violated[k]) rep.passes = false;
  }
  return rep;
}

}  // namespace expmult
