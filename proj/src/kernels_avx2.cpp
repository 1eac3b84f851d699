#include "expmult/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define EXPMULT_HAVE_AVX2 1
#else
#define EXPMULT_HAVE_AVX2 0
#endif

namespace expmult::kernels::avx2 {

#if EXPMULT_HAVE_AVX2

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const double* pa = a.data();
  const double* pb = b.data();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i + 4), _mm256_loadu_pd(pb + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    s += pa[i] * pb[i];
  }
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const double* px = x.data();
  double* py = y.data();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(py + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(px + i), _mm256_loadu_pd(py + i)));
  }
  for (; i < n; ++i) {
    py[i] += alpha * px[i];
  }
}

void gemv(std::span<const double> A, std::span<const double> x, std::span<double> y) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < y.size(); ++r) {
    y[r] = dot(A.subspan(r * cols, cols), x);
  }
}

void gemv_t(std::span<const double> A, std::span<const double> w, std::span<double> y) {
  const std::size_t cols = y.size();
  for (auto& v : y) v = 0.0;
  for (std::size_t r = 0; r < w.size(); ++r) {
    axpy(w[r], A.subspan(r * cols, cols), y);
  }
}

void sym_rank2_update(std::span<double> H, std::span<const double> u,
                      std::span<const double> v, double a, double b) {
  const std::size_t n = u.size();
  const double* pu = u.data();
  const double* pv = v.data();
  for (std::size_t i = 0; i < n; ++i) {
    // row_i += (a u_i + b v_i) u + (b u_i) v
    const double cu = a * pu[i] + b * pv[i];
    const double cv = b * pu[i];
    const __m256d vcu = _mm256_set1_pd(cu);
    const __m256d vcv = _mm256_set1_pd(cv);
    double* row = H.data() + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      __m256d r = _mm256_loadu_pd(row + j);
      r = _mm256_fmadd_pd(vcu, _mm256_loadu_pd(pu + j), r);
      r = _mm256_fmadd_pd(vcv, _mm256_loadu_pd(pv + j), r);
      _mm256_storeu_pd(row + j, r);
    }
    for (; j < n; ++j) {
      row[j] += cu * pu[j] + cv * pv[j];
    }
  }
}

bool compiled() { return true; }

#else

// Non-x86 builds route these to the reference path; the dispatcher never
// selects them because compiled() reports false.
double dot(std::span<const double> a, std::span<const double> b) { return scalar::dot(a, b); }
void axpy(double alpha, std::span<const double> x, std::span<double> y) { scalar::axpy(alpha, x, y); }
void gemv(std::span<const double> A, std::span<const double> x, std::span<double> y) {
  scalar::gemv(A, x, y);
}
void gemv_t(std::span<const double> A, std::span<const double> w, std::span<double> y) {
  scalar::gemv_t(A, w, y);
}
void sym_rank2_update(std::span<double> H, std::span<const double> u,
                      std::span<const double> v, double a, double b) {
  scalar::sym_rank2_update(H, u, v, a, b);
}

bool compiled() { return false; }

#endif

}  // namespace expmult::kernels::avx2
