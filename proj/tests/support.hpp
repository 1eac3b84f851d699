#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "expmult/expr.hpp"
#include "expmult/lp.hpp"
#include "expmult/problem.hpp"

namespace test {

using expmult::Vector;

struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(eng); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(eng); }
  Vector vec(std::size_t n, double a, double b) {
    Vector v(n);
    for (auto& x : v) x = uniform(a, b);
    return v;
  }
};

inline Vector fd_grad(const std::function<double(std::span<const double>)>& f, Vector x,
                      double h = 1e-6) {
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

// |a - b|_inf / max(1, |b|_inf)
inline double rel_err(std::span<const double> a, std::span<const double> b) {
  double d = 0, s = 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
    s = std::max(s, std::abs(b[i]));
  }
  return d / s;
}

inline double sup_dist(std::span<const double> a, std::span<const double> b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Root of phi by Newton's method; independent of the library's inner solver.
inline double newton(const std::function<double(double)>& phi,
                     const std::function<double(double)>& dphi, double x) {
  for (int i = 0; i < 100; ++i) {
    const double step = phi(x) / dphi(x);
    x -= step;
    if (std::abs(step) < 1e-16 * (1 + std::abs(x))) break;
  }
  return x;
}

// x(y) for f = (x+2)^2/2, g = -x: stationarity x + 2 = y e^{-y x}.
inline double active_x_of_y(double y) {
  return newton([y](double x) { return x + 2 - y * std::exp(-y * x); },
                [y](double x) { return 1 + y * y * std::exp(-y * x); }, 0.0);
}

inline expmult::ProblemSpec parse(std::string_view text,
                                  expmult::EqMode mode = expmult::EqMode::SquareEach) {
  return expmult::transform_equalities(expmult::to_problem(expmult::parse_problem_file(text)), mode);
}

inline constexpr std::string_view kActive = "vars: x\nminimize: (x + 2)^2 / 2\nsubject_to:\nineq: -x\n";
inline constexpr std::string_view kInactive = "vars: x\nminimize: (x - 1)^2 / 2\nsubject_to:\nineq: x - 10\n";
inline constexpr std::string_view kCircle = "vars: x1 x2\nminimize: x1 + x2\nsubject_to:\nineq: x1^2 + x2^2 - 2\n";
inline constexpr std::string_view kEqSquare = "vars: x1 x2\nminimize: x1^2 + x2^2\nsubject_to:\neq: x1 + x2 - 1\n";

inline double max_violation(const expmult::LpData& lp, std::span<const double> x) {
  double v = 0;
  for (std::size_t r = 0; r < lp.rows(); ++r) {
    double s = -lp.b[r];
    for (std::size_t c = 0; c < lp.cols(); ++c) s += lp.at(r, c) * x[c];
    v = std::max(v, s);
  }
  return v;
}

// Outer limit for random LPs: inactive multipliers decay sublinearly, so
// some instances need a long tail past the default of 500.
inline constexpr int kLpMaxOuter = 5000;

// N <= 4, m <= 8, continuous coefficients so the optimum is almost surely a
// unique nondegenerate vertex. Feasible by construction (b = A x0 + slack);
// kept only if the oracle finds a bounded optimum.
inline expmult::LpData random_bounded_lp(Rng& rng) {
  for (;;) {
    expmult::LpData lp;
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 4));
    const std::size_t m = static_cast<std::size_t>(rng.integer(static_cast<int>(n) + 1, 8));
    const Vector x0 = rng.vec(n, -1, 1);
    for (std::size_t i = 0; i < n; ++i) lp.u.push_back(rng.uniform(-3, 3));
    for (std::size_t r = 0; r < m; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < n; ++c) {
        const double a = rng.uniform(-3, 3);
        lp.A.push_back(a);
        s += a * x0[c];
      }
      lp.b.push_back(s + rng.uniform(0.1, 2));
    }
    if (expmult::lp_vertex_oracle(lp).status == expmult::LpStatus::Optimal) return lp;
  }
}

}  // namespace test
