#include "msbsde/kernels.hpp"

namespace msbsde::kernels::scalar {

void cubic_shifted(const CubicSplineCoeffs& s, double base, const double* off, std::size_t n, double* out) {
    for (std::size_t l = 0; l < n; ++l) out[l] = eval_cubic_spline(s, base + off[l]);
}

void bicubic_shifted(const BicubicCoeffs& s, double b0, double b1, const double* off, std::size_t n, double* out) {
    for (std::size_t l = 0; l < n; ++l) out[l] = eval_bicubic(s, b0 + off[2 * l], b1 + off[2 * l + 1]);
}

double weighted_sum(const double* w, const double* v, std::size_t n) {
    double acc = 0.0;
    for (std::size_t l = 0; l < n; ++l) acc += w[l] * v[l];
    return acc;
}

}  // namespace msbsde::kernels::scalar
