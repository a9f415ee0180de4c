#pragma once

#include <cstddef>
#include <span>
#include <string>

// Dense double-precision kernels used by the learner's SGD inner loops and the
// value-iteration backups. Scalar reference implementations are always built;
// an AVX2 variant is selected at runtime when the CPU supports it. The two
// paths are equivalence-tested against each other.
namespace wdln::kernels {

enum class Backend { Auto, Scalar, Avx2 };

// Selects the backend for all subsequent kernel calls in this process.
// Auto picks the best supported one. Returns the backend actually active.
Backend set_backend(Backend requested);
Backend active_backend();
std::string backend_name(Backend b);
bool cpu_has_avx2();

double dot(std::span<const double> x, std::span<const double> y);

// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

// x *= a
void scale(double a, std::span<double> x);

double sum(std::span<const double> x);

// Reference implementations, exposed for equivalence tests.
namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);
double sum(const double* x, std::size_t n);
} // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);
double sum(const double* x, std::size_t n);
} // namespace avx2
#endif

} // namespace wdln::kernels
