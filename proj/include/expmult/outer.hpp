#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "expmult/inner.hpp"
#include "expmult/problem.hpp"

namespace expmult {

struct OuterConfig {
  double tol_comp = 1e-8;  ///< bound on max_k |y_k g_k(x)|
  double tol_feas = 1e-8;  ///< bound on max_k g_k(x)
  int max_outer = 500;
  Vector y0{1.0};          ///< one entry broadcasts to every constraint
  Vector x0{};             ///< empty means the origin; one entry broadcasts
  double y_cap = 1e8;      ///< multipliers beyond this are treated as diverging
  double omega = 1.0;      ///< relaxation of the update exponent, in (0, 1]

  /// Stall handling for the two non-hyperbolic regimes of the update rule,
  /// see solve(). Off reproduces the bare iteration.
  bool accelerate = true;
  int stall_window = 3;
  double stall_ratio = 0.9;
  double stall_shrink = 0.1;  ///< factor applied to a stalled inactive multiplier
};

void validate(const OuterConfig& cfg);

enum class SolveStatus {
  Converged,
  ConvergedDivergingMultipliers,
  MaxIterations,
  InnerFailure,
  NotCoercive,
};

std::string_view to_string(SolveStatus s);
std::optional<SolveStatus> solve_status_from_string(std::string_view s);

struct TracePoint {
  int iter = 0;
  Vector x;         ///< x_{j+1}, the inner minimizer for y
  Vector y;         ///< y_j, the multipliers the inner solve used
  Vector g_vals;    ///< g(x_{j+1})
  Vector products;  ///< y_j[k] * g_vals[k]
  double L_value = 0.0;
  int inner_iters = 0;
  double inner_grad_norm = 0.0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::MaxIterations;
  Vector x_star;
  Vector y_star;
  KktResidual kkt;
  double objective = 0.0;
  std::vector<TracePoint> trace;
  std::vector<std::string> warnings;
  /// Outer iterations after which the master-function value rose. With a
  /// unique inner minimizer this only reflects the change in y; for
  /// non-convex problems it flags possible jumps between valleys.
  int valley_jumps = 0;
  /// Shrunk multipliers that had to be put back because their constraint
  /// became violated or the inner problem lost its minimizer.
  int stall_restores = 0;
  int outer_iters() const { return static_cast<int>(trace.size()); }
};

/// y_k' = y_k * safe_exp(omega * y_k * g_k). Components at zero stay at zero.
Vector multiplier_update(std::span<const double> y, std::span<const double> g_vals,
                         double omega = 1.0, double exp_cap = 30.0);

struct MapResult {
  Vector x_of_y;
  Vector Gy;
  Vector g_vals;
  InnerResult inner;
  bool coercive = true;  ///< false when the inner solve diverged; Gy is then empty
};

/// One application of the fixed-point map: x(y) by inner minimization from
/// x_warm, then G(y) = y .* exp(y .* g(x(y))).
MapResult map_G(const ProblemSpec& p, std::span<const double> y, std::span<const double> x_warm,
                const InnerOptions& opts = {});

/// Decides whether the iteration recorded in `trace` has terminated. Returns
/// nullopt while it should continue.
std::optional<SolveStatus> classify_termination(const std::vector<TracePoint>& trace,
                                                const OuterConfig& cfg);

/**
 * Runs the exponential-multiplier iteration on an inequality-only problem.
 *
 * Each outer step minimizes the master function with a warm start, records a
 * trace row, checks termination and rescales the multipliers.
 *
 * With cfg.accelerate the update is augmented for the two regimes where the
 * bare map converges sublinearly: a strictly inactive constraint whose
 * multiplier decays like 1/j is shrunk by cfg.stall_shrink once x has
 * settled (and restored if the constraint is later violated or the shrink
 * loses the minimizer), and a violated constraint whose multiplier grows by
 * a vanishing relative amount is boosted by a factor that doubles on each
 * consecutive stall. Both moves go in the direction the bare rule
 * prescribes and leave its fixed points unchanged.
 */
SolveReport solve(const ProblemSpec& p, const OuterConfig& cfg = {},
                  const InnerOptions& opts = {});

struct ScanRow {
  double y = 0.0;
  Vector x;
  double g_bar = 0.0;  ///< g(x(y))
  double G = 0.0;      ///< y exp(y g_bar)
};

struct ScanResult {
  std::vector<ScanRow> rows;
  bool complete = true;
  std::string error;  ///< set when an inner failure cut the table short
};

/// Tabulates x(y), g(x(y)) and G(y) on an even grid of `steps` points in
/// [y_min, y_max] for a problem with exactly one inequality constraint.
ScanResult scan_1d(const ProblemSpec& p, double y_min, double y_max, int steps,
                   const InnerOptions& opts = {}, std::span<const double> x0 = {});

struct ProbeReport {
  Vector g_vals;
  std::vector<bool> violated;
  bool passes = true;
  InnerStatus inner_status = InnerStatus::Converged;
  Vector x;
};

/// Minimizes the master function at y = y_large * 1 and reports which
/// constraints remain violated (g_k > feas_tol). Passing is necessary, not
/// sufficient, for large multipliers to force feasibility.
ProbeReport well_balanced_probe(const ProblemSpec& p, double y_large,
                                const InnerOptions& opts = {}, std::span<const double> x0 = {},
                                double feas_tol = 0.0);

}  // namespace expmult
