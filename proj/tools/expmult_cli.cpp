// expmult: command-line front end for the exponential-multiplier solver.
//
//   expmult solve problem.txt [--json report.json] [--trace trace.csv]
//   expmult lp lp.json
//   expmult bench [--jobs 4] [--json bench.json]
//   expmult scan1d problem.txt 0.25 8 50 > scan.csv

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "expmult/bench.hpp"
#include "expmult/error.hpp"
#include "expmult/expr.hpp"
#include "expmult/lp.hpp"
#include "expmult/outer.hpp"
#include "expmult/report_io.hpp"

using namespace expmult;

namespace {

enum Exit { kOk = 0, kBenchFail = 1, kDiverging = 2, kMaxIter = 3, kFailure = 4, kInput = 5 };

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged:
      return kOk;
    case SolveStatus::ConvergedDivergingMultipliers:
      return kDiverging;
    case SolveStatus::MaxIterations:
      return kMaxIter;
    case SolveStatus::NotCoercive:
    case SolveStatus::InnerFailure:
      return kFailure;
  }
  return kFailure;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class Fn>
void write_file(const std::string& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  fn(out);
  if (!out) throw InputError("write failed for " + path);
}

std::string vec_str(const Vector& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format17(v[i]);
  }
  return s + "]";
}

void print_summary(const SolveReport& r) {
  std::cout << "status: " << to_string(r.status) << "\n"
            << "outer iterations: " << r.outer_iters() << "\n"
            << "x: " << vec_str(r.x_star) << "\n"
            << "y: " << vec_str(r.y_star) << "\n"
            << "objective: " << format17(r.objective) << "\n"
            << "kkt: stationarity " << format17(r.kkt.stationarity) << ", feasibility "
            << format17(r.kkt.feasibility) << ", complementarity "
            << format17(r.kkt.complementarity) << "\n";
  for (const auto& w : r.warnings) std::cout << "warning: " << w << "\n";
}

struct Common {
  OuterConfig cfg;
  InnerOptions inner;
  bool no_accel = false;
  std::string json, trace;

  void add_solver(CLI::App* app) {
    app->add_option("--tol-comp", cfg.tol_comp, "complementarity tolerance")->capture_default_str();
    app->add_option("--tol-feas", cfg.tol_feas, "feasibility tolerance")->capture_default_str();
    app->add_option("--max-outer", cfg.max_outer, "outer iteration limit")->capture_default_str();
    app->add_option("--y0", cfg.y0, "initial multipliers, comma separated (one value broadcasts)")
        ->delimiter(',');
    app->add_option("--x0", cfg.x0, "initial point, comma separated (one value broadcasts)")
        ->delimiter(',');
    app->add_option("--omega", cfg.omega, "update relaxation in (0, 1]")->capture_default_str();
    app->add_option("--y-cap", cfg.y_cap, "multiplier divergence threshold")->capture_default_str();
    app->add_flag("--no-accel", no_accel, "run the bare update rule without stall handling");
    app->add_option("--grad-tol", inner.grad_tol, "inner gradient tolerance")->capture_default_str();
    app->add_option("--max-inner", inner.max_iters, "inner iteration limit")->capture_default_str();
  }
  void finalize() {
    if (no_accel) cfg.accelerate = false;
  }
};

int cmd_solve(const std::string& file, const std::string& eq_mode, Common& c) {
  const auto mode = eq_mode_from_string(eq_mode);
  if (!mode) throw InputError("unknown --eq-mode " + eq_mode);
  const ProblemSpec p = transform_equalities(to_problem(parse_problem_file(read_file(file))), *mode);
  validate(c.cfg);
  validate(c.inner);
  const SolveReport r = solve(p, c.cfg, c.inner);
  print_summary(r);
  if (!c.json.empty()) write_file(c.json, [&](std::ostream& os) { write_report_json(os, r); });
  if (!c.trace.empty()) {
    write_file(c.trace, [&](std::ostream& os) { write_trace_csv(os, r, p.dim(), p.num_ineq()); });
  }
  return exit_code(r.status);
}

int cmd_lp(const std::string& file, Common& c) {
  const LpData lp = parse_lp_json(read_file(file));
  const ProblemSpec p = build_lp_problem(lp);
  validate(c.cfg);
  validate(c.inner);
  const LpSolveReport r = solve_lp(lp, c.cfg, c.inner);
  print_summary(r.report);
  std::cout << "max violation: " << format17(r.max_violation) << "\n";
  if (r.oracle) {
    std::cout << "vertex oracle: " << to_string(r.oracle->status);
    if (r.oracle->status == LpStatus::Optimal) {
      std::cout << ", x " << vec_str(r.oracle->x_opt) << ", objective " << format17(r.oracle->obj);
    }
    std::cout << "\n";
  }
  if (!c.json.empty()) write_file(c.json, [&](std::ostream& os) { write_lp_report_json(os, r); });
  if (!c.trace.empty()) {
    write_file(c.trace,
               [&](std::ostream& os) { write_trace_csv(os, r.report, p.dim(), p.num_ineq()); });
  }
  return exit_code(r.report.status);
}

int cmd_bench(Common& c, int jobs, double tol_x, bool no_timing) {
  validate(c.cfg);
  validate(c.inner);
  if (jobs < 1) throw InputError("--jobs must be at least 1");
  auto corpus = builtin_corpus();
  if (tol_x > 0.0) {
    for (auto& e : corpus) e.tol.x = tol_x;
  }
  const BenchReport r = run_suite(corpus, c.cfg, c.inner, jobs);
  for (const auto& e : r.entries) {
    std::printf("%-16s %-4s %-30s outer %4d\n", e.id.c_str(), e.pass ? "ok" : "FAIL",
                std::string(to_string(e.status)).c_str(), e.outer_iters);
    for (const auto& why : e.reasons) std::printf("    %s\n", why.c_str());
  }
  std::printf("pass %d, fail %d, update-direction violations %d\n", r.pass, r.fail,
              r.update_violations);
  std::fflush(stdout);
  if (!c.json.empty()) {
    write_file(c.json, [&](std::ostream& os) { write_bench_json(os, r, !no_timing); });
  }
  return r.fail == 0 && r.update_violations == 0 ? kOk : kBenchFail;
}

int cmd_scan1d(const std::string& file, double y_min, double y_max, int steps,
               const std::string& out, Common& c) {
  const ProblemSpec p = to_problem(parse_problem_file(read_file(file)));
  if (p.num_ineq() != 1 || p.num_eq() != 0) {
    throw InputError("scan1d needs exactly one inequality constraint and no equalities");
  }
  if (!(y_min > 0.0) || !(y_max > y_min) || steps < 1) {
    throw InputError("scan1d needs 0 < y_min < y_max and steps >= 1");
  }
  validate(c.inner);
  const Vector x0 = c.cfg.x0.size() == 1 ? Vector(p.dim(), c.cfg.x0[0]) : c.cfg.x0;
  const ScanResult s = scan_1d(p, y_min, y_max, steps, c.inner, x0);
  if (out.empty()) {
    write_scan_csv(std::cout, s);
  } else {
    write_file(out, [&](std::ostream& os) { write_scan_csv(os, s); });
  }
  if (!s.complete) {
    std::cerr << "scan stopped early: " << s.error << "\n";
    return kFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exponential-multiplier solver for constrained nonlinear programs"};
  app.require_subcommand(1, 1);

  Common c;
  std::string file, eq_mode = "square", out;
  int jobs = 1, steps = 50;
  double tol_x = 0.0, y_min = 0.25, y_max = 8.0;
  bool no_timing = false;

  auto* solve_cmd = app.add_subcommand("solve", "solve a problem file");
  solve_cmd->add_option("file", file, "problem file")->required();
  solve_cmd->add_option("--eq-mode", eq_mode, "equality transform: square, aggregate or pair")
      ->capture_default_str();
  c.add_solver(solve_cmd);
  solve_cmd->add_option("--json", c.json, "write the report as JSON");
  solve_cmd->add_option("--trace", c.trace, "write the outer trace as CSV");

  auto* lp_cmd = app.add_subcommand("lp", "solve an LP given as JSON {u, A, b}");
  lp_cmd->add_option("file", file, "LP file")->required();
  c.add_solver(lp_cmd);
  lp_cmd->add_option("--json", c.json, "write the report as JSON");
  lp_cmd->add_option("--trace", c.trace, "write the outer trace as CSV");

  auto* bench_cmd = app.add_subcommand("bench", "run the built-in corpus");
  c.add_solver(bench_cmd);
  bench_cmd->add_option("--jobs", jobs, "parallel solves")->capture_default_str();
  bench_cmd->add_option("--json", c.json, "write the bench report as JSON");
  bench_cmd->add_option("--tol-x", tol_x, "override every entry's x tolerance");
  bench_cmd->add_flag("--no-timing", no_timing, "omit wall times from the JSON report");

  auto* scan_cmd = app.add_subcommand("scan1d", "tabulate x(y), g(x(y)) and G(y)");
  scan_cmd->add_option("file", file, "problem file with one inequality")->required();
  scan_cmd->add_option("y_min", y_min, "first grid point")->required();
  scan_cmd->add_option("y_max", y_max, "last grid point")->required();
  scan_cmd->add_option("steps", steps, "number of grid points")->required();
  scan_cmd->add_option("--x0", c.cfg.x0, "start point for the first inner solve")->delimiter(',');
  scan_cmd->add_option("--grad-tol", c.inner.grad_tol, "inner gradient tolerance");
  scan_cmd->add_option("-o,--out", out, "write the CSV here instead of standard output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInput;
  }
  c.finalize();

  try {
    if (*solve_cmd) return cmd_solve(file, eq_mode, c);
    if (*lp_cmd) return cmd_lp(file, c);
    if (*bench_cmd) return cmd_bench(c, jobs, tol_x, no_timing);
    if (*scan_cmd) return cmd_scan1d(file, y_min, y_max, steps, out, c);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const ParseError& e) {
    std::cerr << file << ": " << e.what() << "\n";
    return kInput;
  } catch (const DomainError& e) {
    std::cerr << file << ": " << e.what() << "\n";
    return kInput;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  }
  return kInput;
}
