#include "expmult/kernels.hpp"

namespace expmult::kernels::scalar {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] += alpha * x[i];
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
  for (std::size_t i = 0; i < n; ++i) {
    const double ui = u[i];
    const double vi = v[i];
    double* row = H.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] += a * ui * u[j] + b * (ui * v[j] + vi * u[j]);
    }
  }
}

}  // namespace expmult::kernels::scalar
