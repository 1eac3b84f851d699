#pragma once

// Dense vector kernels used by the inner solver and the LP frontend.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The variant is picked once at startup from the CPU's
// capabilities; setting EXPMULT_KERNELS=scalar in the environment forces the
// reference path. Both variants are deterministic for a fixed backend, but
// they do not sum in the same order, so results agree only to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace expmult::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b);

/// True when the running CPU supports AVX2 and FMA and the variant was built.
bool avx2_available();

Backend active_backend();

/// Switches the process-wide backend. Throws std::invalid_argument when the
/// requested backend is not available on this machine.
void set_backend(Backend b);

double dot(std::span<const double> a, std::span<const double> b);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// y = A x with A row-major, rows = y.size(), cols = x.size().
void gemv(std::span<const double> A, std::span<const double> x, std::span<double> y);

/// y = A^T w with A row-major, rows = w.size(), cols = y.size().
void gemv_t(std::span<const double> A, std::span<const double> w, std::span<double> y);

/// H += a * u u^T + b * (u v^T + v u^T) for a dense n x n matrix H.
void sym_rank2_update(std::span<double> H, std::span<const double> u,
                      std::span<const double> v, double a, double b);

double norm2(std::span<const double> x);

// Direct access to each implementation, for equivalence tests and benchmarks.
namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(std::span<const double> A, std::span<const double> x, std::span<double> y);
void gemv_t(std::span<const double> A, std::span<const double> w, std::span<double> y);
void sym_rank2_update(std::span<double> H, std::span<const double> u,
                      std::span<const double> v, double a, double b);
}  // namespace scalar

namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(std::span<const double> A, std::span<const double> x, std::span<double> y);
void gemv_t(std::span<const double> A, std::span<const double> w, std::span<double> y);
void sym_rank2_update(std::span<double> H, std::span<const double> u,
                      std::span<const double> v, double a, double b);
}  // namespace avx2

}  // namespace expmult::kernels
