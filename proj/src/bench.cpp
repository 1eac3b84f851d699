#include "expmult/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cfloat>
#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

#include "expmult/error.hpp"
#include "expmult/report_io.hpp"

namespace expmult {

namespace {

constexpr double kRefFeasTol = 1e-9;
constexpr double kRefStatTol = 1e-8;
constexpr double kKktOnlyStatTol = 1e-6;

double sup_dist(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::string num(double v) { return std::isfinite(v) ? format17(v) : "null"; }

std::string join_statuses(const std::vector<SolveStatus>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += " or ";
    out += to_string(v[i]);
  }
  return out;
}

CorpusEntry problem_entry(std::string id, std::string_view text, Reference ref) {
  CorpusEntry e;
  e.id = std::move(id);
  e.source = parse_problem_file(text);
  e.reference = std::move(ref);
  return e;
}

// Reference from the vertex oracle, which must report a bounded optimum.
CorpusEntry lp_entry(std::string id, LpData lp) {
  const LpOracleResult o = lp_vertex_oracle(lp);
  if (o.status != LpStatus::Optimal) throw Error("corpus LP " + id + " has no optimum");
  CorpusEntry e;
  e.id = std::move(id);
  e.source = std::move(lp);
  e.reference = Reference{o.x_opt, std::nullopt, o.obj, Provenance::VertexOracle};
  return e;
}

CorpusEntry lp_failure_entry(std::string id, LpData lp, std::vector<SolveStatus> expected) {
  CorpusEntry e;
  e.id = std::move(id);
  e.source = std::move(lp);
  e.expected_status = std::move(expected);
  return e;
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::AnalyticKkt:
      return "analytic-kkt";
    case Provenance::VertexOracle:
      return "vertex-oracle";
    case Provenance::UnconstrainedFeasible:
      return "unconstrained-feasible";
  }
  return "analytic-kkt";
}

ProblemSpec entry_problem(const CorpusEntry& e) {
  if (const auto* lp = std::get_if<LpData>(&e.source)) return build_lp_problem(*lp);
  return transform_equalities(to_problem(std::get<ProblemSource>(e.source)), e.eq_mode);
}

void revalidate_reference(const CorpusEntry& e) {
  if (!e.reference) return;
  const Reference& ref = *e.reference;
  auto fail = [&](const std::string& what) {
    throw Error("corpus entry " + e.id + ": reference " + what);
  };
  const ProblemSpec p = entry_problem(e);
  if (ref.x_ref.size() != p.dim()) fail("point has the wrong dimension");
  for (double g : eval_constraints(p, ref.x_ref)) {
    if (g > kRefFeasTol) fail("violates a constraint by " + format17(g));
  }
  if (const auto* src = std::get_if<ProblemSource>(&e.source)) {
    const ProblemSpec orig = to_problem(*src);
    for (const auto& h : orig.eq()) {
      const double v = h->value(ref.x_ref);
      if (std::abs(v) > kRefFeasTol) fail("violates an equality by " + format17(v));
    }
  }
  if (std::abs(p.objective().value(ref.x_ref) - ref.obj_ref) > kRefFeasTol) {
    fail("objective does not match obj_ref");
  }
  if (ref.y_ref) {
    if (ref.y_ref->size() != p.num_ineq()) fail("multiplier vector has the wrong length");
    const KktResidual k = kkt_residual(p, ref.x_ref, *ref.y_ref);
    if (k.stationarity > kRefStatTol) fail("is not stationary (" + format17(k.stationarity) + ")");
    if (k.dual_feasibility > 0.0) fail("has a negative multiplier");
  }
}

std::vector<CorpusEntry> builtin_corpus() {
  using S = SolveStatus;
  std::vector<CorpusEntry> c;

  auto e = problem_entry("ineq-active",
                         "vars: x\nminimize: (x + 2)^2 / 2\nsubject_to:\nineq: -x\n",
                         {{0.0}, Vector{2.0}, 2.0, Provenance::AnalyticKkt});
  e.tol = {1e-6, 1e-6, 1e-6};
  c.push_back(std::move(e));

  e = problem_entry("ineq-inactive",
                    "vars: x\nminimize: (x - 1)^2 / 2\nsubject_to:\nineq: x - 10\n",
                    {{1.0}, Vector{0.0}, 0.0, Provenance::UnconstrainedFeasible});
  e.tol = {1e-6, 1e-6, 1e-6};
  c.push_back(std::move(e));

  // Unconstrained minimizer on the boundary: active with a zero multiplier.
  // Along the path x = y/2, so stopping at y^2/2 <= tol_comp only pins x to
  // within sqrt(tol_comp / 2).
  e = problem_entry("ineq-boundary", "vars: x\nminimize: x^2\nsubject_to:\nineq: -x\n",
                    {{0.0}, Vector{0.0}, 0.0, Provenance::AnalyticKkt});
  e.tol = {1e-5, 1e-4, 2e-4};
  c.push_back(std::move(e));

  c.push_back(problem_entry("circle",
                            "vars: x1 x2\nminimize: x1 + x2\nsubject_to:\n"
                            "ineq: x1^2 + x2^2 - 2\n",
                            {{-1.0, -1.0}, Vector{0.5}, -2.0, Provenance::AnalyticKkt}));

  c.push_back(problem_entry("two-ineq",
                            "vars: x1 x2\nminimize: (x1 - 2)^2 + (x2 - 1)^2\nsubject_to:\n"
                            "ineq: x1^2 - x2\nineq: x1 + x2 - 2\n",
                            {{1.0, 1.0}, Vector{2.0 / 3.0, 2.0 / 3.0}, 1.0,
                             Provenance::AnalyticKkt}));

  e = problem_entry("eq-square",
                    "vars: x1 x2\nminimize: x1^2 + x2^2\nsubject_to:\neq: x1 + x2 - 1\n",
                    {{0.5, 0.5}, std::nullopt, 0.5, Provenance::AnalyticKkt});
  e.eq_mode = EqMode::SquareEach;
  e.expected_status = {S::Converged, S::ConvergedDivergingMultipliers};
  e.tol = {1e-4, 1e-4, 1e-4};
  c.push_back(std::move(e));

  // The pair transform keeps finite multipliers, but only y1 - y2 is determined.
  e = problem_entry("eq-pair",
                    "vars: x1 x2\nminimize: x1^2 + 2 * x2^2\nsubject_to:\neq: x1 + x2 - 3\n",
                    {{2.0, 1.0}, std::nullopt, 6.0, Provenance::AnalyticKkt});
  e.eq_mode = EqMode::Pair;
  c.push_back(std::move(e));

  e = problem_entry("nonconvex-local",
                    "vars: x1 x2\nminimize: -x1 * x2\nsubject_to:\nineq: x1^2 + x2^2 - 2\n",
                    {{1.0, 1.0}, Vector{0.5}, -1.0, Provenance::AnalyticKkt});
  e.x0 = {0.5, 0.3};
  e.kkt_only = true;
  c.push_back(std::move(e));

  c.push_back(lp_entry("lp-triangle", {{-1, -2}, {1, 1, -1, 0, 0, -1}, {1, 0, 0}}));
  c.push_back(lp_entry("lp-quad", {{-2, -3}, {1, 2, 3, 1, -1, 0, 0, -1}, {4, 6, 0, 0}}));
  c.push_back(lp_entry("lp-cover3",
                       {{1, 1, 1},
                        {-1, -1, 0, 0, -1, -1, -1, 0, -1, -1, 0, 0, 0, -1, 0, 0, 0, -1},
                        {-1, -1, -1, 0, 0, 0}}));
  c.push_back(lp_failure_entry("lp-unbounded", {{-1, 0}, {-1, 0, 0, -1, 0, 1}, {0, 0, 1}},
                               {S::NotCoercive}));
  c.push_back(lp_failure_entry("lp-infeasible",
                               {{1, 1}, {1, 0, -1, 0, 0, -1, 0, 1}, {-1, 0, 0, 1}},
                               {S::MaxIterations, S::NotCoercive, S::InnerFailure}));

  for (const auto& entry : c) revalidate_reference(entry);
  return c;
}

Verdict compare_to_reference(EntryResult& r, const CorpusEntry& e, const OuterConfig& cfg) {
  Verdict v;
  const double nan = std::nan("");
  r.obj_err = r.x_err = r.y_err = nan;
  auto fail = [&](std::string why) {
    v.pass = false;
    v.reasons.push_back(std::move(why));
  };

  if (std::find(e.expected_status.begin(), e.expected_status.end(), r.status) ==
      e.expected_status.end()) {
    fail("status mismatch: got " + std::string(to_string(r.status)) + ", expected " +
         join_statuses(e.expected_status));
  }
  const bool solved = r.status == SolveStatus::Converged ||
                      r.status == SolveStatus::ConvergedDivergingMultipliers;
  if (!e.reference || !solved) return v;

  const Reference& ref = *e.reference;
  r.obj_err = std::abs(r.report.objective - ref.obj_ref);
  r.x_err = sup_dist(r.report.x_star, ref.x_ref);
  if (ref.y_ref) r.y_err = sup_dist(r.report.y_star, *ref.y_ref);

  if (r.kkt.complementarity > cfg.tol_comp) {
    fail("complementarity " + format17(r.kkt.complementarity) + " above " + format17(cfg.tol_comp));
  }
  if (r.kkt.feasibility > cfg.tol_feas) {
    fail("feasibility " + format17(r.kkt.feasibility) + " above " + format17(cfg.tol_feas));
  }
  if (e.kkt_only) {
    if (!(r.kkt.stationarity <= kKktOnlyStatTol)) {
      fail("stationarity " + format17(r.kkt.stationarity) + " above " + format17(kKktOnlyStatTol));
    }
    return v;
  }
  if (!(r.obj_err <= e.tol.obj)) fail("objective error " + format17(r.obj_err));
  if (!(r.x_err <= e.tol.x)) fail("x error " + format17(r.x_err));
  if (ref.y_ref && !(r.y_err <= e.tol.y)) fail("y error " + format17(r.y_err));
  return v;
}

std::vector<UpdateViolation> update_direction_violations(const SolveReport& rep) {
  std::vector<UpdateViolation> out;
  for (std::size_t j = 0; j + 1 < rep.trace.size(); ++j) {
    const TracePoint& a = rep.trace[j];
    const TracePoint& b = rep.trace[j + 1];
    for (std::size_t k = 0; k < a.y.size(); ++k) {
      const double g = a.g_vals[k];
      const double y0 = a.y[k];
      const double y1 = b.y[k];
      if (g == 0.0 || y0 == 0.0) continue;
      if (y1 == y0 && std::abs(y0 * g) <= DBL_EPSILON) continue;
      const bool ok = g > 0.0 ? y1 > y0 : y1 < y0;
      if (!ok) out.push_back({a.iter, k, g, y0, y1});
    }
  }
  return out;
}

BenchReport run_suite(const std::vector<CorpusEntry>& corpus, const OuterConfig& cfg,
                      const InnerOptions& opts, int jobs) {
  if (corpus.empty()) throw std::invalid_argument("run_suite needs a non-empty corpus");
  std::set<std::string> ids;
  for (const auto& e : corpus) {
    if (!ids.insert(e.id).second) throw std::invalid_argument("duplicate corpus id " + e.id);
  }
  validate(cfg);
  validate(opts);

  std::vector<EntryResult> results(corpus.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < corpus.size(); i = next++) {
      const CorpusEntry& e = corpus[i];
      EntryResult& r = results[i];
      r.id = e.id;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        OuterConfig c = cfg;
        if (!e.x0.empty()) c.x0 = e.x0;
        r.report = solve(entry_problem(e), c, opts);
        r.status = r.report.status;
        r.kkt = r.report.kkt;
        r.outer_iters = r.report.outer_iters();
        const Verdict v = compare_to_reference(r, e, cfg);
        r.pass = v.pass;
        r.reasons = v.reasons;
      } catch (const std::exception& ex) {
        r.status = SolveStatus::InnerFailure;
        r.obj_err = r.x_err = r.y_err = std::nan("");
        r.pass = false;
        r.reasons = {std::string("exception: ") + ex.what()};
      }
      r.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
  };

  const std::size_t n_threads =
      std::clamp<std::size_t>(jobs < 1 ? 1 : static_cast<std::size_t>(jobs), 1, corpus.size());
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  BenchReport rep;
  rep.entries = std::move(results);
  std::sort(rep.entries.begin(), rep.entries.end(),
            [](const EntryResult& a, const EntryResult& b) { return a.id < b.id; });
  for (const auto& r : rep.entries) {
    (r.pass ? rep.pass : rep.fail)++;
    rep.update_violations += static_cast<int>(update_direction_violations(r.report).size());
  }
  return rep;
}

void write_bench_json(std::ostream& os, const BenchReport& rep, bool timing) {
  os << "{\n  \"entries\": [";
  for (std::size_t i = 0; i < rep.entries.size(); ++i) {
    const EntryResult& r = rep.entries[i];
    os << (i ? ",\n" : "\n") << "    {\"id\": " << json_quote(r.id)
       << ", \"status\": " << json_quote(std::string(to_string(r.status)))
       << ", \"pass\": " << (r.pass ? "true" : "false")
       << ", \"obj_err\": " << num(r.obj_err) << ", \"x_err\": " << num(r.x_err)
       << ", \"kkt\": {\"stationarity\": " << num(r.kkt.stationarity)
       << ", \"feasibility\": " << num(r.kkt.feasibility)
       << ", \"complementarity\": " << num(r.kkt.complementarity)
       << ", \"dual_feasibility\": " << num(r.kkt.dual_feasibility) << "}"
       << ", \"outer_iters\": " << r.outer_iters;
    if (timing) os << ", \"ms\": " << num(r.ms);
    os << ", \"reasons\": [";
    for (std::size_t k = 0; k < r.reasons.size(); ++k) {
      if (k) os << ", ";
      os << json_quote(r.reasons[k]);
    }
    os << "]}";
  }
  os << "\n  ],\n  \"summary\": {\"pass\": " << rep.pass << ", \"fail\": " << rep.fail
     << ", \"update_violations\": " << rep.update_violations << "}\n}\n";
}

}  // namespace expmult
