#include <doctest.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "expmult/kernels.hpp"
#include "support.hpp"

namespace k = expmult::kernels;
using test::Rng;
using test::Vector;

namespace {

// Scale-aware bound for a sum of n products reordered by the vector path.
double sum_tol(std::size_t n, double scale) { return 8.0 * n * 1.2e-16 * scale + 1e-300; }

double abs_dot(const Vector& a, const Vector& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] * b[i]);
  return s;
}

}  // namespace

TEST_CASE("scalar kernels on small fixed inputs") {
  const Vector a{1, 2, 3}, b{4, -5, 6};
  CHECK(k::scalar::dot(a, b) == 12.0);
  Vector y{1, 1, 1};
  k::scalar::axpy(2.0, a, y);
  CHECK(y == Vector{3, 5, 7});
  const Vector A{1, 2, 3, 4, 5, 6};  // 2 x 3
  Vector out2(2), out3(3);
  k::scalar::gemv(A, a, out2);
  CHECK(out2 == Vector{14, 32});
  k::scalar::gemv_t(A, Vector{1, -1}, out3);
  CHECK(out3 == Vector{-3, -3, -3});
  Vector H(4, 0.0);
  k::scalar::sym_rank2_update(H, Vector{1, 2}, Vector{3, 0}, 1.0, 0.5);
  // u u^T = [1 2; 2 4], u v^T + v u^T = [6 6; 6 0]
  CHECK(H == Vector{4, 5, 5, 4});
  CHECK(k::norm2(Vector{3, 4}) == doctest::Approx(5.0));
}

TEST_CASE("norm2 of an empty vector") { CHECK(k::norm2(Vector{}) == 0.0); }

TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!k::avx2_available()) {
    MESSAGE("AVX2/FMA not available; equivalence test skipped");
    return;
  }
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(0, 37));  // covers every tail length
    const std::size_t m = static_cast<std::size_t>(rng.integer(1, 9));
    const Vector a = rng.vec(n, -10, 10), b = rng.vec(n, -10, 10);
    CHECK(std::abs(k::avx2::dot(a, b) - k::scalar::dot(a, b)) <= sum_tol(n, abs_dot(a, b)));

    Vector y1 = rng.vec(n, -1, 1), y2 = y1;
    k::avx2::axpy(0.37, a, y1);
    k::scalar::axpy(0.37, a, y2);
    CHECK(test::sup_dist(y1, y2) <= 1e-14);

    const Vector A = rng.vec(m * n, -3, 3);
    Vector g1(m), g2(m);
    k::avx2::gemv(A, a, g1);
    k::scalar::gemv(A, a, g2);
    CHECK(test::sup_dist(g1, g2) <= sum_tol(n, 30.0 * n + 1));

    const Vector w = rng.vec(m, -3, 3);
    Vector t1(n), t2(n);
    k::avx2::gemv_t(A, w, t1);
    k::scalar::gemv_t(A, w, t2);
    CHECK(test::sup_dist(t1, t2) <= sum_tol(m, 9.0 * m + 1));

    Vector H1 = rng.vec(n * n, -1, 1), H2 = H1;
    k::avx2::sym_rank2_update(H1, a, b, 0.25, -1.5);
    k::scalar::sym_rank2_update(H2, a, b, 0.25, -1.5);
    CHECK(test::sup_dist(H1, H2) <= 1e-12);
  }
}

TEST_CASE("backend switch is honoured and reversible") {
  const auto before = k::active_backend();
  k::set_backend(k::Backend::Scalar);
  CHECK(k::active_backend() == k::Backend::Scalar);
  CHECK(k::dot(Vector{1, 2}, Vector{3, 4}) == 11.0);
  if (k::avx2_available()) {
    k::set_backend(k::Backend::Avx2);
    CHECK(k::active_backend() == k::Backend::Avx2);
  } else {
    CHECK_THROWS_AS(k::set_backend(k::Backend::Avx2), std::invalid_argument);
  }
  k::set_backend(before);
  CHECK(k::backend_name(k::Backend::Scalar) == "scalar");
}

TEST_CASE("each backend is deterministic") {
  Rng rng(11);
  const Vector a = rng.vec(101, -1, 1), b = rng.vec(101, -1, 1);
  const auto before = k::active_backend();
  for (auto be : {k::Backend::Scalar, k::Backend::Avx2}) {
    if (be == k::Backend::Avx2 && !k::avx2_available()) continue;
    k::set_backend(be);
    const double d1 = k::dot(a, b), d2 = k::dot(a, b);
    CHECK(std::memcmp(&d1, &d2, sizeof d1) == 0);
  }
  k::set_backend(before);
}
