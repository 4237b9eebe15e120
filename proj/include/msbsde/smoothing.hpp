#pragma once

#include <functional>
#include <span>
#include <vector>

#include "msbsde/grid.hpp"
#include "msbsde/problems.hpp"

namespace msbsde {

/// Mollifier phi(t) = sum_k c_k B(t - k), with B the centred cardinal
/// B-spline of even order mu. The coefficients make the Fourier transform
/// 1 + O(xi^mu), so convolving with phi scaled to width h perturbs smooth
/// data by O(h^mu), and phi_h * g is C^{mu-2} even when g has a kink.
class SmoothingKernel {
public:
    /// mu = 4 (support 3) or mu = 6 (support 5).
    explicit SmoothingKernel(int order);

    int order() const noexcept { return order_; }
    /// phi vanishes outside [-support, support].
    int support() const noexcept { return order_ / 2 + static_cast<int>(coeffs_.size()) - 1; }
    /// c_0, c_1, ...; c_{-k} = c_k.
    const std::vector<double>& coefficients() const noexcept { return coeffs_; }

    double operator()(double t) const noexcept;

private:
    int order_;
    std::vector<double> coeffs_;
};

/// Centred cardinal B-spline of order mu (degree mu - 1).
double cardinal_bspline(int mu, double t) noexcept;

/// Replaces samples at grid points within kernel reach of the kink by the
/// exact convolution (phi_h * g)(x_i) along the unit kink normal u,
/// integral of phi(t) g(x_i - h t u) dt with h = scale * dx. The integral is
/// taken piecewise with Gauss-Legendre rules split at the kink, so g must be
/// supplied as a function, not only as samples. Other samples pass through.
std::vector<double> smooth_terminal(std::span<const double> samples, const SpaceGrid& grid, const Kink& kink,
                                    const std::function<double(const double*)>& g, const SmoothingKernel& kernel,
                                    double scale = 1.0);

}  // namespace msbsde
