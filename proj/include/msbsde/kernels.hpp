#pragma once

#include <cstddef>
#include <string_view>

#include "msbsde/spline.hpp"

/// Inner loops of the layer sweep: batched spline evaluation on a shifted
/// stencil and weighted sums. Each kernel has a portable scalar reference and
/// an AVX2/FMA variant; the variant is picked at runtime.
namespace msbsde::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;

/// Throws invalid-argument for anything other than "scalar" or "avx2".
Isa parse_isa(std::string_view name);

/// True when the variant was compiled in and the CPU reports the features.
bool supported(Isa isa) noexcept;

/// Best supported variant.
Isa detect() noexcept;

/// Variant used by the dispatching entry points. Defaults to detect().
Isa active() noexcept;

/// Selects a variant for the whole process; unsupported variants throw.
void set_active(Isa isa);

/// out[l] = s(base + off[l]) for l < n.
void cubic_shifted(const CubicSplineCoeffs& s, double base, const double* off, std::size_t n, double* out);

/// out[l] = s(b0 + off[2l], b1 + off[2l+1]) for l < n.
void bicubic_shifted(const BicubicCoeffs& s, double b0, double b1, const double* off, std::size_t n, double* out);

/// sum_l w[l] * v[l]. The summation order is fixed per variant.
double weighted_sum(const double* w, const double* v, std::size_t n);

namespace scalar {
void cubic_shifted(const CubicSplineCoeffs& s, double base, const double* off, std::size_t n, double* out);
void bicubic_shifted(const BicubicCoeffs& s, double b0, double b1, const double* off, std::size_t n, double* out);
double weighted_sum(const double* w, const double* v, std::size_t n);
}  // namespace scalar

namespace avx2 {
void cubic_shifted(const CubicSplineCoeffs& s, double base, const double* off, std::size_t n, double* out);
void bicubic_shifted(const BicubicCoeffs& s, double b0, double b1, const double* off, std::size_t n, double* out);
double weighted_sum(const double* w, const double* v, std::size_t n);
}  // namespace avx2

}  // namespace msbsde::kernels
