#include "wdln/kernels.hpp"

#include <stdexcept>

namespace wdln::kernels {

namespace {

struct Vtable {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double, double*, std::size_t);
    double (*sum)(const double*, std::size_t);
};

constexpr Vtable kScalar{scalar::dot, scalar::axpy, scalar::scale, scalar::sum};

#if defined(__x86_64__) || defined(_M_X64)
constexpr Vtable kAvx2{avx2::dot, avx2::axpy, avx2::scale, avx2::sum};
#endif

Backend g_active = Backend::Auto;
Vtable g_vtable = kScalar;
bool g_initialized = false;

void activate(Backend b) {
    switch (b) {
    case Backend::Scalar:
        g_vtable = kScalar;
        g_active = Backend::Scalar;
        break;
    case Backend::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
        if (!cpu_has_avx2()) throw std::runtime_error("AVX2 backend requested but CPU lacks AVX2");
        g_vtable = kAvx2;
        g_active = Backend::Avx2;
        break;
#else
        throw std::runtime_error("AVX2 backend unavailable on this architecture");
#endif
    case Backend::Auto:
        activate(cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar);
        break;
    }
    g_initialized = true;
}

void ensure_initialized() {
    if (!g_initialized) activate(Backend::Auto);
}

} // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend set_backend(Backend requested) {
    activate(requested);
    return g_active;
}

Backend active_backend() {
    ensure_initialized();
    return g_active;
}

std::string backend_name(Backend b) {
    switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Auto: return "auto";
    }
    return "unknown";
}

double dot(std::span<const double> x, std::span<const double> y) {
    ensure_initialized();
    return g_vtable.dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    ensure_initialized();
    g_vtable.axpy(a, x.data(), y.data(), x.size());
}

void scale(double a, std::span<double> x) {
    ensure_initialized();
    g_vtable.scale(a, x.data(), x.size());
}

double sum(std::span<const double> x) {
    ensure_initialized();
    return g_vtable.sum(x.data(), x.size());
}

} // namespace wdln::kernels
