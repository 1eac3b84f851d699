#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "expmult/kernels.hpp"

namespace expmult::kernels {

namespace avx2 {
bool compiled();
}

namespace {

struct Table {
  double (*dot)(std::span<const double>, std::span<const double>);
  void (*axpy)(double, std::span<const double>, std::span<double>);
  void (*gemv)(std::span<const double>, std::span<const double>, std::span<double>);
  void (*gemv_t)(std::span<const double>, std::span<const double>, std::span<double>);
  void (*sym_rank2_update)(std::span<double>, std::span<const double>, std::span<const double>,
                           double, double);
};

constexpr Table kScalar{scalar::dot, scalar::axpy, scalar::gemv, scalar::gemv_t,
                        scalar::sym_rank2_update};
constexpr Table kAvx2{avx2::dot, avx2::axpy, avx2::gemv, avx2::gemv_t, avx2::sym_rank2_update};

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("EXPMULT_KERNELS"); env != nullptr) {
    if (std::string(env) == "scalar") return Backend::Scalar;
  }
  return avx2_available() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> slot{initial_backend()};
  return slot;
}

const Table& table() {
  return backend_slot().load(std::memory_order_relaxed) == Backend::Avx2 ? kAvx2 : kScalar;
}

}  // namespace

std::string_view backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

bool avx2_available() {
  static const bool ok = avx2::compiled() && cpu_has_avx2();
  return ok;
}

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (b == Backend::Avx2 && !avx2_available()) {
    throw std::invalid_argument("AVX2 kernels are not available on this machine");
  }
  backend_slot().store(b, std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b) { return table().dot(a, b); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  table().axpy(alpha, x, y);
}

void gemv(std::span<const double> A, std::span<const double> x, std::span<double> y) {
  table().gemv(A, x, y);
}

void gemv_t(std::span<const double> A, std::span<const double> w, std::span<double> y) {
  table().gemv_t(A, w, y);
}

void sym_rank2_update(std::span<double> H, std::span<const double> u,
                      std::span<const double> v, double a, double b) {
  table().sym_rank2_update(H, u, v, a, b);
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

}  // namespace expmult::kernels
