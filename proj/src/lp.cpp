#include "expmult/lp.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include <json.hpp>

#include "expmult/error.hpp"
#include "expmult/kernels.hpp"

namespace expmult {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kPivotTol = 1e-10;

bool row_is_zero(const LpData& lp, std::size_t r) {
  for (std::size_t c = 0; c < lp.cols(); ++c) {
    if (lp.at(r, c) != 0.0) return false;
  }
  return true;
}

/// Dense row-major matrix with just enough linear algebra for the oracle.
struct Dense {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vector a;
  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

/// Reduces M in place to reduced row echelon form; returns the pivot columns.
std::vector<std::size_t> rref(Dense& M) {
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < M.cols && r < M.rows; ++c) {
    std::size_t best = r;
    for (std::size_t i = r + 1; i < M.rows; ++i) {
      if (std::abs(M(i, c)) > std::abs(M(best, c))) best = i;
    }
    if (std::abs(M(best, c)) <= kPivotTol) continue;
    for (std::size_t j = 0; j < M.cols; ++j) std::swap(M(r, j), M(best, j));
    const double piv = M(r, c);
    for (std::size_t j = 0; j < M.cols; ++j) M(r, j) /= piv;
    for (std::size_t i = 0; i < M.rows; ++i) {
      if (i == r || M(i, c) == 0.0) continue;
      const double f = M(i, c);
      for (std::size_t j = 0; j < M.cols; ++j) M(i, j) -= f * M(r, j);
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

/// Basis of {d : M d = 0}.
std::vector<Vector> nullspace(Dense M) {
  const auto pivots = rref(M);
  std::vector<bool> is_pivot(M.cols, false);
  for (auto c : pivots) is_pivot[c] = true;
  std::vector<Vector> basis;
  for (std::size_t free = 0; free < M.cols; ++free) {
    if (is_pivot[free]) continue;
    Vector d(M.cols, 0.0);
    d[free] = 1.0;
    for (std::size_t r = 0; r < pivots.size(); ++r) d[pivots[r]] = -M(r, free);
    basis.push_back(std::move(d));
  }
  return basis;
}

/// Solves the square system S x = rhs; false when S is singular.
bool solve_square(Dense S, Vector rhs, Vector& x) {
  const std::size_t n = S.rows;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t best = c;
    for (std::size_t i = c + 1; i < n; ++i) {
      if (std::abs(S(i, c)) > std::abs(S(best, c))) best = i;
    }
    if (std::abs(S(best, c)) <= kPivotTol) return false;
    if (best != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(S(c, j), S(best, j));
      std::swap(rhs[c], rhs[best]);
    }
    for (std::size_t i = c + 1; i < n; ++i) {
      const double f = S(i, c) / S(c, c);
      if (f == 0.0) continue;
      for (std::size_t j = c; j < n; ++j) S(i, j) -= f * S(c, j);
      rhs[i] -= f * rhs[c];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= S(i, j) * x[j];
    x[i] = s / S(i, i);
  }
  return true;
}

/// Calls fn(indices) for every k-subset of {0..n-1} in lexicographic order.
template <class Fn>
void for_each_subset(std::size_t n, std::size_t k, Fn&& fn) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    fn(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

std::string_view to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal:
      return "Optimal";
    case LpStatus::Infeasible:
      return "Infeasible";
    case LpStatus::Unbounded:
      return "Unbounded";
  }
  return "Infeasible";
}

void validate(const LpData& lp) {
  if (lp.cols() == 0) throw DimensionError("LP needs at least one variable");
  if (lp.A.size() != lp.rows() * lp.cols()) {
    throw DimensionError("LP matrix has " + std::to_string(lp.A.size()) + " entries, expected " +
                         std::to_string(lp.rows()) + " x " + std::to_string(lp.cols()));
  }
  auto finite = [](const Vector& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(lp.u) || !finite(lp.A) || !finite(lp.b)) {
    throw DimensionError("LP data must be finite");
  }
}

LpData parse_lp_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed LP JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("u") || !j.contains("A") || !j.contains("b")) {
    throw Error("LP JSON must be an object with keys \"u\", \"A\", \"b\"");
  }
  LpData lp;
  try {
    lp.u = j.at("u").get<Vector>();
    lp.b = j.at("b").get<Vector>();
    const auto rows = j.at("A").get<std::vector<Vector>>();
    if (rows.size() != lp.b.size()) {
      throw DimensionError("LP matrix has " + std::to_string(rows.size()) + " rows but b has " +
                           std::to_string(lp.b.size()) + " entries");
    }
    for (const auto& r : rows) {
      if (r.size() != lp.u.size()) {
        throw DimensionError("LP matrix row has " + std::to_string(r.size()) +
                             " entries, expected " + std::to_string(lp.u.size()));
      }
      lp.A.insert(lp.A.end(), r.begin(), r.end());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed LP JSON: ") + e.what());
  }
  validate(lp);
  return lp;
}

ProblemSpec build_lp_problem(const LpData& lp, std::vector<std::size_t>* dropped) {
  validate(lp);
  const std::size_t n = lp.cols();
  std::vector<FunctionPtr> ineq;
  for (std::size_t r = 0; r < lp.rows(); ++r) {
    if (row_is_zero(lp, r)) {
      if (lp.b[r] < 0.0) {
        throw DimensionError("LP row " + std::to_string(r + 1) +
                             " reads 0 <= b with b < 0; the LP is infeasible");
      }
      if (dropped) dropped->push_back(r);
      continue;
    }
    Vector row(lp.A.begin() + static_cast<std::ptrdiff_t>(r * n),
               lp.A.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
    ineq.push_back(std::make_shared<AffineFunction>(std::move(row), -lp.b[r]));
  }
  return ProblemSpec(n, std::make_shared<AffineFunction>(lp.u, 0.0), std::move(ineq));
}

LpOracleResult lp_vertex_oracle(const LpData& lp) {
  validate(lp);
  const std::size_t n = lp.cols();
  if (n > kOracleMaxCols || lp.rows() > kOracleMaxRows) {
    throw DimensionError("LP too large for the vertex oracle (N <= 8, m <= 16)");
  }

  // Rows of the working system; directions along which A x is constant are
  // pinned to zero when the objective is flat along them.
  Dense W{lp.rows(), n, lp.A};
  Vector rhs = lp.b;
  const auto lineality = nullspace(W);
  bool unbounded_lineality = false;
  for (const auto& d : lineality) {
    if (std::abs(kernels::dot(lp.u, d)) > kFeasTol) unbounded_lineality = true;
    for (double sgn : {1.0, -1.0}) {
      for (double v : d) W.a.push_back(sgn * v);
      rhs.push_back(0.0);
      ++W.rows;
    }
  }

  auto feasible = [&](std::span<const double> x) {
    for (std::size_t r = 0; r < W.rows; ++r) {
      if (kernels::dot(std::span<const double>(W.a).subspan(r * n, n), x) > rhs[r] + kFeasTol) {
        return false;
      }
    }
    return true;
  };

  LpOracleResult best;
  bool found = false;
  Vector x;
  for_each_subset(W.rows, n, [&](const std::vector<std::size_t>& idx) {
    Dense S{n, n, Vector(n * n)};
    Vector r(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < n; ++c) S(i, c) = W(idx[i], c);
      r[i] = rhs[idx[i]];
    }
    if (!solve_square(S, r, x) || !feasible(x)) return;
    const double obj = kernels::dot(lp.u, x);
    const double tie = 1e-12 * std::max(1.0, std::abs(obj));
    if (!found || obj < best.obj - tie || (std::abs(obj - best.obj) <= tie && lex_less(x, best.x_opt))) {
      best.obj = obj;
      best.x_opt = x;
      found = true;
    }
  });

  if (!found) {
    return {LpStatus::Infeasible, {}, 0.0};
  }
  if (unbounded_lineality) {
    return {LpStatus::Unbounded, {}, -INFINITY};
  }

  // Extreme rays of {d : W d <= 0}: each lies on n-1 independent tight rows.
  bool unbounded = false;
  auto check_ray = [&](const Vector& d) {
    const double scale = kernels::norm2(d);
    if (scale == 0.0) return;
    for (std::size_t r = 0; r < W.rows; ++r) {
      if (kernels::dot(std::span<const double>(W.a).subspan(r * n, n), d) > kFeasTol * scale) {
        return;
      }
    }
    if (kernels::dot(lp.u, d) < -kFeasTol * scale) unbounded = true;
  };
  for_each_subset(W.rows, n - 1, [&](const std::vector<std::size_t>& idx) {
    if (unbounded) return;
    Dense T{n - 1, n, Vector((n - 1) * n)};
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t c = 0; c < n; ++c) T(i, c) = W(idx[i], c);
    }
    const auto ns = nullspace(T);
    if (ns.size() != 1) return;
    Vector d = ns[0];
    check_ray(d);
    for (auto& v : d) v = -v;
    check_ray(d);
  });
  if (unbounded) {
    return {LpStatus::Unbounded, {}, -INFINITY};
  }
  best.status = LpStatus::Optimal;
  return best;
}

LpSolveReport solve_lp(const LpData& lp, const OuterConfig& cfg, const InnerOptions& opts) {
  LpSolveReport out;
  const ProblemSpec p = build_lp_problem(lp, &out.dropped_rows);
  out.report = solve(p, cfg, opts);
  for (auto r : out.dropped_rows) {
    out.report.warnings.push_back("dropped vacuous zero row " + std::to_string(r + 1));
  }
  if (lp.cols() <= kOracleMaxCols && lp.rows() <= kOracleMaxRows) {
    out.oracle = lp_vertex_oracle(lp);
  }
  const std::size_t n = lp.cols();
  if (out.report.x_star.size() == n) {
    for (std::size_t r = 0; r < lp.rows(); ++r) {
      const double v =
          kernels::dot(std::span<const double>(lp.A).subspan(r * n, n), out.report.x_star) - lp.b[r];
      out.max_violation = std::max(out.max_violation, v);
    }
  }
  return out;
}

}  // namespace expmult
