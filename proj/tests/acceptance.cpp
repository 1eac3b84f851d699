#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "expmult/bench.hpp"
#include "expmult/inner.hpp"
#include "expmult/lp.hpp"
#include "expmult/outer.hpp"
#include "support.hpp"

using namespace expmult;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

// Criterion 8 aggregates reports gathered by the others, so lines are
// collected and printed in criterion order at the end.
std::map<int, std::string> lines;
int failures = 0;

void report(int id, bool ok, const std::string& what) {
  char head[16];
  std::snprintf(head, sizeof head, "%s %2d ", ok ? "PASS" : "FAIL", id);
  lines[id] = head + what;
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every Converged report collected along the way, checked by criterion 8.
std::vector<SolveReport> converged;

SolveReport solve_and_keep(const ProblemSpec& p, const OuterConfig& c) {
  SolveReport r = solve(p, c);
  if (r.status == SolveStatus::Converged) converged.push_back(r);
  return r;
}

void active() {
  const auto t0 = Clock::now();
  const SolveReport r = solve_and_keep(test::parse(test::kActive), {});
  const double t = seconds_since(t0);
  const double dx = std::abs(r.x_star[0]);
  const double dy = std::abs(r.y_star[0] - 2);
  const bool ok = r.status == SolveStatus::Converged && dx <= 1e-6 && dy <= 1e-6 &&
                  r.outer_iters() <= 100 && t < 1.0;
  report(1, ok, fmt("1D active: |x|=%.2e |y-2|=%.2e", dx, dy) +
                    fmt(" outer=%.0f time=%.3fs", r.outer_iters(), t));
}

void inactive() {
  const SolveReport r = solve_and_keep(test::parse(test::kInactive), {});
  const double dx = std::abs(r.x_star[0] - 1);
  report(2, dx <= 1e-6 && r.y_star[0] <= 1e-6 && r.y_star[0] >= 0,
         fmt("1D inactive: |x-1|=%.2e y=%.2e", dx, r.y_star[0]));
}

void circle() {
  const SolveReport r = solve_and_keep(test::parse(test::kCircle), {});
  const double dx = test::sup_dist(r.x_star, Vector{-1, -1});
  const double dy = std::abs(r.y_star[0] - 0.5);
  report(3, dx <= 1e-5 && dy <= 1e-5, fmt("circle: |x-x*|=%.2e |y-y*|=%.2e", dx, dy));
}

void lp_oracle() {
  OuterConfig cfg;
  cfg.max_outer = test::kLpMaxOuter;
  std::vector<LpData> lps;
  test::Rng rng(4);
  for (int i = 0; i < 20; ++i) lps.push_back(test::random_bounded_lp(rng));
  int fixed = 0;
  bool unbounded_ok = false;
  for (const auto& e : builtin_corpus()) {
    const auto* lp = std::get_if<LpData>(&e.source);
    if (!lp) continue;
    if (e.reference) {
      lps.push_back(*lp);
      ++fixed;
    } else if (e.id == "lp-unbounded") {
      unbounded_ok = solve_lp(*lp, cfg).report.status == SolveStatus::NotCoercive;
    }
  }
  int bad = 0;
  double worst_obj = 0, worst_viol = 0;
  for (const auto& lp : lps) {
    const LpSolveReport r = solve_lp(lp, cfg);
    if (r.report.status == SolveStatus::Converged) converged.push_back(r.report);
    const double obj = r.oracle ? std::abs(r.report.objective - r.oracle->obj) : INFINITY;
    const double viol = test::max_violation(lp, r.report.x_star);
    worst_obj = std::max(worst_obj, obj);
    worst_viol = std::max(worst_viol, viol);
    bad += !(obj <= 1e-5 && viol <= 1e-6);
  }
  report(4, bad == 0 && fixed >= 3 && unbounded_ok,
         fmt("LP oracle: %.0f random + %.0f corpus LPs, ", 20, fixed) +
             fmt("%.0f outside tolerance, worst |obj err|=%.2e worst violation=%.2e", bad,
                 worst_obj, worst_viol) +
             (unbounded_ok ? ", unbounded -> NotCoercive" : ", unbounded LP not NotCoercive"));
}

void scan() {
  const ScanResult s = scan_1d(test::parse(test::kActive), 0.25, 8, 50);
  double worst = -INFINITY;
  const auto& r = s.rows;
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    const double h = r[i + 1].y - r[i - 1].y;
    const double dg = (r[i + 1].g_bar - r[i - 1].g_bar) / h;
    const double dG = (r[i + 1].G - r[i - 1].G) / h;
    const double w = 1 + r[i].y * r[i].g_bar;
    worst = std::max({worst, w * dg, dG * dg, -dG * w});
  }
  report(5, s.complete && r.size() == 50 && worst <= 1e-6,
         fmt("scan_1d: %.0f rows, largest inequality excess %.2e", r.size(), worst));
}

void gradients() {
  test::Rng rng(6);
  const InnerOptions opts;
  double worst = 0;
  int capped = 0, points = 0;
  for (const auto& e : builtin_corpus()) {
    const ProblemSpec p = entry_problem(e);
    for (int i = 0; i < 100; ++i) {
      const Vector x = rng.vec(p.dim(), -3, 3);
      // Every fourth point draws large multipliers so the capped branch is hit.
      const Vector y = rng.vec(p.num_ineq(), 0, i % 4 == 0 ? 60 : 5);
      const MasterEval ev = master_eval(p, y, x, opts);
      for (std::size_t k = 0; k < y.size(); ++k) capped += y[k] * ev.g[k] > opts.exp_cap;
      const Vector fd = test::fd_grad(
          [&](std::span<const double> z) { return master_eval(p, y, z, opts).value; }, x);
      worst = std::max(worst, test::rel_err(ev.grad, fd));
      ++points;
    }
  }
  report(6, worst <= 1e-6 && capped > 0,
         fmt("gradients: %.0f points, worst relative error %.2e, %.0f capped terms", points, worst,
             capped));
}

void eq_square() {
  const SolveReport r = solve_and_keep(test::parse(test::kEqSquare, EqMode::SquareEach), {});
  const double dx = test::sup_dist(r.x_star, Vector{0.5, 0.5});
  double prod = 0;
  for (double p : r.trace.back().products) prod = std::max(prod, std::abs(p));
  const bool status_ok = r.status == SolveStatus::Converged ||
                         r.status == SolveStatus::ConvergedDivergingMultipliers;
  report(7, dx <= 1e-4 && prod <= 1e-8 && status_ok,
         fmt("equality transform: |x-x*|=%.2e max|y g|=%.2e", dx, prod) + " status " +
             std::string(to_string(r.status)));
}

BenchReport bench_once() {
  const BenchReport b = run_suite(builtin_corpus());
  for (const auto& e : b.entries) {
    if (e.status == SolveStatus::Converged) converged.push_back(e.report);
  }
  return b;
}

void update_direction(const BenchReport& b) {
  std::size_t rows = 0;
  for (const auto& e : b.entries) rows += e.report.trace.size();
  report(9, b.update_violations == 0,
         fmt("update direction: %.0f violations over %.0f trace rows", b.update_violations,
             rows));
}

void init_independence() {
  test::Rng rng(10);
  double worst = 0;
  int problems = 0;
  for (const auto& e : builtin_corpus()) {
    if (!e.reference || e.kkt_only) continue;
    const ProblemSpec p = entry_problem(e);
    std::vector<Vector> xs;
    for (int i = 0; i < 5; ++i) {
      OuterConfig c;
      if (!e.x0.empty()) c.x0 = e.x0;
      c.y0 = rng.vec(p.num_ineq(), 0.1, 5);
      xs.push_back(solve_and_keep(p, c).x_star);
    }
    for (int i = 0; i < 5; ++i) {
      OuterConfig c;
      c.x0 = rng.vec(p.dim(), -2, 2);
      xs.push_back(solve_and_keep(p, c).x_star);
    }
    for (const auto& a : xs) {
      for (const auto& b : xs) worst = std::max(worst, test::sup_dist(a, b));
    }
    ++problems;
  }
  report(10, worst <= 1e-5,
         fmt("initialization: %.0f convex problems x 10 starts, largest spread %.2e", problems,
             worst));
}

void postconditions() {
  const OuterConfig cfg;
  int bad = 0;
  for (const auto& r : converged) {
    bool ok = r.kkt.complementarity <= cfg.tol_comp && r.kkt.feasibility <= cfg.tol_feas &&
              r.kkt.stationarity <= 1e-6;
    for (double v : r.y_star) ok = ok && v >= 0;
    bad += !ok;
  }
  report(8, bad == 0 && !converged.empty(),
         fmt("fixed-point postconditions: %.0f Converged reports, %.0f violations",
             converged.size(), bad));
}

void determinism(const std::string& cli) {
  const fs::path dir = fs::temp_directory_path() / ("expmult_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::ofstream(dir / "p.txt") << "vars: x1 x2\nminimize: (x1 - 2)^2 + (x2 - 1)^2\nsubject_to:\n"
                                  "ineq: x1^2 - x2\nineq: x1 + x2 - 2\n";
  bool ok = true;
  std::vector<std::string> outputs;
  for (int run = 0; run < 2; ++run) {
    const std::string tag = std::to_string(run);
    const std::string cmd = cli + " solve " + (dir / "p.txt").string() + " --trace " +
                            (dir / ("t" + tag + ".csv")).string() + " --json " +
                            (dir / ("r" + tag + ".json")).string() + " > " +
                            (dir / ("o" + tag + ".txt")).string();
    ok = ok && std::system(cmd.c_str()) == 0;
  }
  const std::string t0 = slurp(dir / "t0.csv"), r0 = slurp(dir / "r0.json");
  ok = ok && !t0.empty() && !r0.empty() && t0 == slurp(dir / "t1.csv") &&
       r0 == slurp(dir / "r1.json") && slurp(dir / "o0.txt") == slurp(dir / "o1.txt");
  fs::remove_all(dir);
  report(11, ok, fmt("determinism: two CLI runs, trace %.0f bytes, report %.0f bytes", t0.size(),
                     r0.size()));
}

void bench_time(const std::string& cli) {
  const auto t0 = Clock::now();
  const int rc = std::system((cli + " bench > /dev/null").c_str());
  const double t = seconds_since(t0);
  report(12, rc == 0 && t < 60, fmt("bench: full suite in %.3fs", t));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: acceptance <path to expmult>\n");
    return 2;
  }
  const std::string cli = argv[1];
  active();
  inactive();
  circle();
  lp_oracle();
  scan();
  gradients();
  eq_square();
  const BenchReport b = bench_once();
  update_direction(b);
  init_independence();
  postconditions();
  determinism(cli);
  bench_time(cli);
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
