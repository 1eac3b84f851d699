#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "expmult/bench.hpp"
#include "expmult/error.hpp"
#include "support.hpp"

using namespace expmult;

namespace {

const EntryResult& find(const BenchReport& r, std::string_view id) {
  for (const auto& e : r.entries) {
    if (e.id == id) return e;
  }
  throw std::runtime_error("no entry " + std::string(id));
}

CorpusEntry active_entry() {
  CorpusEntry e;
  e.id = "active";
  e.source = parse_problem_file(test::kActive);
  e.reference = Reference{{0.0}, Vector{2.0}, 2.0, Provenance::AnalyticKkt};
  return e;
}

std::string json(const BenchReport& r) {
  std::ostringstream os;
  write_bench_json(os, r, false);
  return os.str();
}

}  // namespace

TEST_CASE("built-in corpus passes") {
  const BenchReport r = run_suite(builtin_corpus());
  for (const auto& e : r.entries) CHECK_MESSAGE(e.pass, e.id);
  CHECK(r.fail == 0);
  CHECK(r.pass == static_cast<int>(r.entries.size()));
  CHECK(r.update_violations == 0);
  CHECK(find(r, "lp-unbounded").status == SolveStatus::NotCoercive);
  CHECK(find(r, "ineq-active").x_err <= 1e-6);
  CHECK(std::isnan(find(r, "lp-unbounded").obj_err));
}

TEST_CASE("entries come back sorted by id") {
  const BenchReport r = run_suite(builtin_corpus());
  for (std::size_t i = 1; i < r.entries.size(); ++i) {
    CHECK(r.entries[i - 1].id < r.entries[i].id);
  }
}

TEST_CASE("compare_to_reference examples") {
  const CorpusEntry e = active_entry();
  OuterConfig cfg;
  EntryResult r;
  r.report = solve(entry_problem(e), cfg);
  r.status = r.report.status;
  r.kkt = r.report.kkt;
  Verdict v = compare_to_reference(r, e, cfg);
  CHECK(v.pass);
  CHECK(v.reasons.empty());
  CHECK(r.x_err <= 1e-6);
  CHECK(r.y_err <= 1e-6);

  EntryResult wrong = r;
  wrong.report.x_star = {0.5};
  v = compare_to_reference(wrong, e, cfg);
  CHECK_FALSE(v.pass);
  CHECK(wrong.x_err == doctest::Approx(0.5));

  EntryResult status = r;
  status.status = SolveStatus::MaxIterations;
  v = compare_to_reference(status, e, cfg);
  CHECK_FALSE(v.pass);
  REQUIRE(v.reasons.size() == 1);
  CHECK(v.reasons[0].find("status mismatch") != std::string::npos);
  CHECK(std::isnan(status.x_err));

  EntryResult loose = r;
  loose.kkt.complementarity = 1e-3;
  CHECK_FALSE(compare_to_reference(loose, e, cfg).pass);
}

TEST_CASE("job count does not change results") {
  const auto corpus = builtin_corpus();
  const std::string one = json(run_suite(corpus, {}, {}, 1));
  CHECK(one == json(run_suite(corpus, {}, {}, 4)));
  CHECK(one == json(run_suite(corpus, {}, {}, 64)));
  CHECK(one.find("\"ms\"") == std::string::npos);
}

TEST_CASE("revalidation rejects bad references") {
  CorpusEntry e = active_entry();
  CHECK_NOTHROW(revalidate_reference(e));

  CorpusEntry infeasible = e;
  infeasible.reference->x_ref = {-1.0};
  infeasible.reference->obj_ref = 0.5;
  CHECK_THROWS_AS(revalidate_reference(infeasible), Error);

  CorpusEntry bad_obj = e;
  bad_obj.reference->obj_ref = 1.0;
  CHECK_THROWS_AS(revalidate_reference(bad_obj), Error);

  CorpusEntry not_stationary = e;
  not_stationary.reference->y_ref = Vector{1.0};
  CHECK_THROWS_AS(revalidate_reference(not_stationary), Error);

  CorpusEntry negative = e;
  negative.reference = Reference{{1.0}, Vector{-1.0}, 4.5, Provenance::AnalyticKkt};
  CHECK_THROWS_AS(revalidate_reference(negative), Error);

  CorpusEntry wrong_dim = e;
  wrong_dim.reference->x_ref = {0.0, 0.0};
  CHECK_THROWS_AS(revalidate_reference(wrong_dim), Error);
}

TEST_CASE("run_suite rejects empty corpora and duplicate ids") {
  CHECK_THROWS_AS(run_suite({}), std::invalid_argument);
  CHECK_THROWS_AS(run_suite({active_entry(), active_entry()}), std::invalid_argument);
}

TEST_CASE("entry exceptions are recorded, not thrown") {
  CorpusEntry e;
  e.id = "broken";
  e.source = LpData{{1, 1}, {1}, {1}};
  const BenchReport r = run_suite({e, active_entry()});
  CHECK(r.fail == 1);
  CHECK(r.pass == 1);
  const EntryResult& b = find(r, "broken");
  CHECK_FALSE(b.pass);
  REQUIRE_FALSE(b.reasons.empty());
  CHECK(b.reasons[0].rfind("exception: ", 0) == 0);
}

TEST_CASE("update direction check") {
  SolveReport rep;
  TracePoint a;
  a.iter = 0;
  a.y = {1.0, 1.0, 0.0};
  a.g_vals = {0.5, -0.5, 1.0};
  TracePoint b = a;
  b.iter = 1;
  b.y = {2.0, 0.5, 0.0};
  rep.trace = {a, b};
  CHECK(update_direction_violations(rep).empty());

  rep.trace[1].y = {0.5, 2.0, 0.0};
  const auto v = update_direction_violations(rep);
  REQUIRE(v.size() == 2);
  CHECK(v[0].constraint == 0);
  CHECK(v[1].constraint == 1);

  // A product too small to move y in floating point is exempt.
  rep.trace[0].g_vals = {1e-300, -1e-300, 1.0};
  rep.trace[1].y = {1.0, 1.0, 0.0};
  CHECK(update_direction_violations(rep).empty());
}

TEST_CASE("property: reruns of the suite are byte-identical") {
  const auto corpus = builtin_corpus();
  const std::string first = json(run_suite(corpus));
  for (int i = 0; i < 3; ++i) CHECK(json(run_suite(corpus)) == first);
}
