#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "expmult/expr.hpp"
#include "expmult/lp.hpp"
#include "expmult/outer.hpp"

namespace expmult {

enum class Provenance { AnalyticKkt, VertexOracle, UnconstrainedFeasible };

std::string_view to_string(Provenance p);

struct Reference {
  Vector x_ref;
  std::optional<Vector> y_ref;
  double obj_ref = 0.0;
  Provenance provenance = Provenance::AnalyticKkt;
};

struct Tolerances {
  double obj = 1e-5;
  double x = 1e-5;
  double y = 1e-5;
};

struct CorpusEntry {
  std::string id;
  std::variant<ProblemSource, LpData> source;
  /// Absent for entries that have no solution (unbounded, infeasible).
  std::optional<Reference> reference;
  EqMode eq_mode = EqMode::SquareEach;
  /// Any of these statuses counts as a match.
  std::vector<SolveStatus> expected_status{SolveStatus::Converged};
  Tolerances tol;
  Vector x0;  ///< overrides the suite start point when non-empty
  /// Local acceptance only: KKT residual and feasibility are checked, the
  /// reference point and objective are not.
  bool kkt_only = false;
};

/// The inequality-only problem the solver sees for this entry.
ProblemSpec entry_problem(const CorpusEntry& e);

/// Checks that the reference is feasible to 1e-9 (|h| for equalities as
/// well) and, when y_ref is given, stationary to 1e-8. Throws Error with the
/// entry id otherwise.
void revalidate_reference(const CorpusEntry& e);

/// The built-in corpus, every reference revalidated.
std::vector<CorpusEntry> builtin_corpus();

struct EntryResult {
  std::string id;
  SolveStatus status = SolveStatus::InnerFailure;
  double obj_err = 0.0;  ///< NaN without a reference
  double x_err = 0.0;    ///< sup norm; NaN without a reference
  double y_err = 0.0;    ///< sup norm; NaN without y_ref
  KktResidual kkt;
  int outer_iters = 0;
  double ms = 0.0;
  bool pass = false;
  std::vector<std::string> reasons;
  SolveReport report;
};

struct Verdict {
  bool pass = true;
  std::vector<std::string> reasons;
};

/// Fills the error fields of `r` from the entry reference and decides pass or
/// fail. Never throws.
Verdict compare_to_reference(EntryResult& r, const CorpusEntry& e, const OuterConfig& cfg);

struct UpdateViolation {
  int iter = 0;
  std::size_t constraint = 0;
  double g = 0.0;
  double y_before = 0.0;
  double y_after = 0.0;
};

/// Consecutive trace rows where the multiplier moved against the sign of
/// g_k(x_{j+1}). A multiplier at zero, or one whose product |y g| is too
/// small to change y in floating point, is exempt from the strict move.
std::vector<UpdateViolation> update_direction_violations(const SolveReport& rep);

struct BenchReport {
  std::vector<EntryResult> entries;  ///< sorted by id
  int pass = 0;
  int fail = 0;
  int update_violations = 0;
};

/// Solves every entry, up to `jobs` at a time. Entry failures (including
/// exceptions) are recorded and never stop the suite. Throws
/// std::invalid_argument on an empty corpus or duplicate ids.
BenchReport run_suite(const std::vector<CorpusEntry>& corpus, const OuterConfig& cfg = {},
                      const InnerOptions& opts = {}, int jobs = 1);

/// Writes the report as JSON. With timing=false the "ms" fields are omitted
/// so the output is byte-reproducible.
void write_bench_json(std::ostream& os, const BenchReport& rep, bool timing = true);

}  // namespace expmult
