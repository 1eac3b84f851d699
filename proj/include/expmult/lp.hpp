#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "expmult/outer.hpp"
#include "expmult/problem.hpp"

namespace expmult {

/// minimize u . x subject to A x <= b, with A dense and row-major.
struct LpData {
  Vector u;
  Vector A;  ///< rows() x cols(), row-major
  Vector b;

  std::size_t cols() const { return u.size(); }
  std::size_t rows() const { return b.size(); }
  double at(std::size_t r, std::size_t c) const { return A[r * cols() + c]; }
};

/// Throws DimensionError on inconsistent sizes or non-finite entries.
void validate(const LpData& lp);

/// Parses {"u": [...], "A": [[...], ...], "b": [...]}. Throws Error on
/// malformed JSON or inconsistent dimensions.
LpData parse_lp_json(std::string_view text);

/// The master-function problem for an LP. Zero rows with b_k >= 0 are
/// vacuous and dropped (reported through `dropped`); a zero row with b_k < 0
/// makes the LP infeasible and is rejected with DimensionError.
ProblemSpec build_lp_problem(const LpData& lp, std::vector<std::size_t>* dropped = nullptr);

enum class LpStatus { Optimal, Infeasible, Unbounded };

std::string_view to_string(LpStatus s);

struct LpOracleResult {
  LpStatus status = LpStatus::Infeasible;
  Vector x_opt;  ///< set when Optimal
  double obj = 0.0;
};

inline constexpr std::size_t kOracleMaxCols = 8;
inline constexpr std::size_t kOracleMaxRows = 16;

/// Brute-force reference solver: enumerates every vertex of {A x <= b} and
/// every extreme ray of its recession cone. Desk scale only (N <= 8,
/// m <= 16); throws DimensionError beyond that.
LpOracleResult lp_vertex_oracle(const LpData& lp);

struct LpSolveReport {
  SolveReport report;
  std::optional<LpOracleResult> oracle;  ///< present when the LP fits the oracle limits
  std::vector<std::size_t> dropped_rows;
  double max_violation = 0.0;  ///< max_k (A_k x* - b_k), clipped at 0
};

/// build_lp_problem + solve, cross-checked against the vertex oracle when
/// possible. An unbounded LP shows up as NotCoercive.
LpSolveReport solve_lp(const LpData& lp, const OuterConfig& cfg = {},
                       const InnerOptions& opts = {});

}  // namespace expmult
