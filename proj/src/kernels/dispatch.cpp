#include <atomic>
#include <string>

#include "msbsde/error.hpp"
#include "msbsde/kernels.hpp"

namespace msbsde::kernels {

namespace {

std::atomic<Isa>& active_slot() {
    static std::atomic<Isa> slot{detect()};
    return slot;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

Isa parse_isa(std::string_view name) {
    if (name == "scalar") return Isa::Scalar;
    if (name == "avx2") return Isa::Avx2;
    raise(ErrorKind::InvalidArgument, "unknown kernel variant '" + std::string(name) + "'");
}

bool supported(Isa isa) noexcept {
    if (isa == Isa::Scalar) return true;
#if defined(MSBSDE_HAVE_AVX2)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa detect() noexcept { return supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar; }

Isa active() noexcept { return active_slot().load(std::memory_order_relaxed); }

void set_active(Isa isa) {
    if (!supported(isa)) {
        raise(ErrorKind::InvalidArgument, "kernel variant '" + std::string(to_string(isa)) + "' is not available");
    }
    active_slot().store(isa, std::memory_order_relaxed);
}

#if defined(MSBSDE_HAVE_AVX2)
#define MSBSDE_DISPATCH(call) (active() == Isa::Avx2 ? avx2::call : scalar::call)
#else
#define MSBSDE_DISPATCH(call) (scalar::call)
#endif

void cubic_shifted(const CubicSplineCoeffs& s, double base, const double* off, std::size_t n, double* out) {
    MSBSDE_DISPATCH(cubic_shifted(s, base, off, n, out));
}

void bicubic_shifted(const BicubicCoeffs& s, double b0, double b1, const double* off, std::size_t n, double* out) {
    MSBSDE_DISPATCH(bicubic_shifted(s, b0, b1, off, n, out));
}

double weighted_sum(const double* w, const double* v, std::size_t n) {
    return MSBSDE_DISPATCH(weighted_sum(w, v, n));
}

#undef MSBSDE_DISPATCH

}  // namespace msbsde::kernels
