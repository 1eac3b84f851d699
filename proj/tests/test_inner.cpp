#include <doctest.h>

#include <cmath>
#include <memory>

#include "expmult/bench.hpp"
#include "expmult/error.hpp"
#include "expmult/inner.hpp"
#include "expmult/lp.hpp"
#include "support.hpp"

using namespace expmult;
using test::Rng;

TEST_CASE("safe_exp examples") {
  CHECK(safe_exp(0, 30) == 1.0);
  CHECK(safe_exp(1, 30) == doctest::Approx(2.718281828));
  CHECK(safe_exp(50, 30) == doctest::Approx(std::exp(30.0) * 221).epsilon(1e-15));
  CHECK(safe_exp(50, 30) == doctest::Approx(2.36171e15).epsilon(1e-5));
  CHECK(safe_exp(-800, 30) == 0.0);
  CHECK(std::isfinite(safe_exp(1e100, 30)));
}

TEST_CASE("safe_exp is C1 across the cap") {
  const double T = 30, d = 1e-9;
  CHECK(safe_exp(T + d, T) == doctest::Approx(safe_exp(T - d, T)).epsilon(3e-9));
  CHECK(safe_exp_deriv(T + d, T) == doctest::Approx(safe_exp_deriv(T - d, T)).epsilon(3e-9));
  CHECK(safe_exp(T, T) == std::exp(T));
  for (double t : {-3.0, 0.5, 29.0, 31.0, 45.0}) {
    const double fd = (safe_exp(t + 1e-6, T) - safe_exp(t - 1e-6, T)) / 2e-6;
    CHECK(safe_exp_deriv(t, T) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("property: safe_exp is convex and increasing") {
  Rng rng(30);
  for (int i = 0; i < 1000; ++i) {
    double t[3] = {rng.uniform(-10, 60), rng.uniform(-10, 60), rng.uniform(-10, 60)};
    std::sort(t, t + 3);
    if (t[2] - t[0] < 1e-3) continue;
    const double lam = (t[2] - t[1]) / (t[2] - t[0]);
    const double chord = lam * safe_exp(t[0], 30) + (1 - lam) * safe_exp(t[2], 30);
    CHECK(safe_exp(t[1], 30) <= chord * (1 + 1e-12));
    CHECK(safe_exp(t[0], 30) <= safe_exp(t[2], 30));
  }
}

TEST_CASE("master_eval examples") {
  const ProblemSpec circle = test::parse(test::kCircle);
  const MasterEval a = master_eval(circle, Vector{1}, Vector{0, 0}, {});
  CHECK(a.value == doctest::Approx(0.135335283));
  CHECK(a.per_term == Vector{std::exp(-2.0)});
  CHECK(a.g == Vector{-2});

  const ProblemSpec act = test::parse(test::kActive);
  const MasterEval b = master_eval(act, Vector{2}, Vector{0}, {});
  CHECK(b.value == 3.0);
  CHECK(b.grad[0] == 0.0);

  const MasterEval c = master_eval(circle, Vector{0}, Vector{0.3, -2}, {});
  CHECK(c.value == doctest::Approx(0.3 - 2 + 1));
  CHECK(c.grad == Vector{1, 1});
  CHECK_THROWS_AS(master_eval(circle, Vector{1, 1}, Vector{0, 0}, {}), DimensionError);
}

TEST_CASE("regularization adds eps/2 |x|^2") {
  const ProblemSpec act = test::parse(test::kActive);
  InnerOptions o;
  o.regularization = 0.5;
  const MasterEval e = master_eval(act, Vector{0}, Vector{2}, o);
  CHECK(e.value == doctest::Approx(8 + 1 + 1));
  CHECK(e.grad[0] == doctest::Approx(4 + 1));
}

TEST_CASE("option validation") {
  InnerOptions o;
  o.ls_shrink = 1.0;
  CHECK_THROWS_AS(validate(o), std::invalid_argument);
  o = {};
  o.grad_tol = 0;
  CHECK_THROWS_AS(validate(o), std::invalid_argument);
  o = {};
  o.armijo_c = 0;
  CHECK_THROWS_AS(validate(o), std::invalid_argument);
}

TEST_CASE("property: master_eval gradient matches central differences, cap branch included") {
  Rng rng(31);
  int capped = 0;
  for (const auto& e : builtin_corpus()) {
    const ProblemSpec p = entry_problem(e);
    for (int i = 0; i < 100; ++i) {
      const Vector x = rng.vec(p.dim(), -3, 3);
      // Every fourth point uses large multipliers so the continuation is hit.
      const Vector y = rng.vec(p.num_ineq(), 0, i % 4 == 0 ? 60 : 5);
      const MasterEval ev = master_eval(p, y, x, {});
      for (std::size_t k = 0; k < y.size(); ++k) capped += y[k] * ev.g[k] > 30;
      const Vector fd = test::fd_grad(
          [&](std::span<const double> z) { return master_eval(p, y, z, {}).value; }, x);
      CHECK_MESSAGE(test::rel_err(ev.grad, fd) <= 1e-6, e.id);
    }
  }
  CHECK(capped > 50);
}

TEST_CASE("inner_minimize on a quadratic bowl") {
  const ProblemSpec p(2, std::make_shared<DiagQuadratic>(Vector{2, 2}, Vector{0, 0}));
  const InnerResult r = inner_minimize(p, Vector{}, Vector{3, -4}, {});
  CHECK(r.status == InnerStatus::Converged);
  CHECK(r.grad_norm <= 1e-10);
  CHECK(test::sup_dist(r.x_star, Vector{0, 0}) <= 1e-10);
}

TEST_CASE("inner_minimize matches the scalar Newton oracle") {
  const double x_ref = test::active_x_of_y(1.0);
  CHECK(x_ref == doctest::Approx(-0.44285).epsilon(1e-5));
  const InnerResult r = inner_minimize(test::parse(test::kActive), Vector{1}, Vector{0}, {});
  CHECK(r.status == InnerStatus::Converged);
  CHECK(std::abs(r.x_star[0] - x_ref) <= 1e-10);
}

TEST_CASE("unbounded LP master function diverges") {
  const ProblemSpec p = build_lp_problem({{-1}, {-1}, {0}});
  const InnerResult r = inner_minimize(p, Vector{1}, Vector{0}, {});
  CHECK(r.status == InnerStatus::Diverged);
}

TEST_CASE("non-finite start is an error") {
  const ProblemSpec p = test::parse("vars: x\nminimize: x\nsubject_to:\nineq: -x\n");
  CHECK_THROWS_AS(inner_minimize(p, Vector{1}, Vector{-1e300}, {}), EvaluationError);
}

TEST_CASE("inverse Hessian carry-over") {
  const ProblemSpec p = test::parse(test::kCircle);
  Vector H;
  const InnerResult a = inner_minimize(p, Vector{1}, Vector{0, 0}, {}, &H);
  CHECK(H.size() == 4);
  const InnerResult b = inner_minimize(p, Vector{1.1}, a.x_star, {}, &H);
  CHECK(b.status == InnerStatus::Converged);
  CHECK(b.iters <= a.iters);
}

// Descent is asserted up to the rounding level of L: close to the minimizer
// the line search accepts steps on derivative information alone.
TEST_CASE("property: accepted inner iterates never increase L") {
  Rng rng(32);
  for (const auto& e : builtin_corpus()) {
    const ProblemSpec p = entry_problem(e);
    for (int i = 0; i < 10; ++i) {
      const Vector y = rng.vec(p.num_ineq(), 0.1, 5);
      const InnerResult r = inner_minimize(p, y, rng.vec(p.dim(), -1, 1), {});
      for (std::size_t j = 1; j < r.value_history.size(); ++j) {
        const double prev = r.value_history[j - 1];
        CHECK(r.value_history[j] <= prev + 1e-13 * std::max(1.0, std::abs(prev)));
      }
      if (r.status == InnerStatus::Converged) CHECK(r.grad_norm <= 1e-10);
    }
  }
}

TEST_CASE("property: strictly convex master functions have one minimizer") {
  Rng rng(33);
  const std::vector<std::string_view> probs{test::kActive, test::kInactive, test::kCircle};
  for (auto text : probs) {
    const ProblemSpec p = test::parse(text);
    for (int i = 0; i < 10; ++i) {
      const Vector y = rng.vec(p.num_ineq(), 0.2, 5);
      const InnerResult a = inner_minimize(p, y, rng.vec(p.dim(), -2, 2), {});
      const InnerResult b = inner_minimize(p, y, rng.vec(p.dim(), -2, 2), {});
      REQUIRE(a.status == InnerStatus::Converged);
      REQUIRE(b.status == InnerStatus::Converged);
      CHECK(test::sup_dist(a.x_star, b.x_star) <= 1e-6);
    }
  }
}
