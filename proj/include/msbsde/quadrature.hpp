#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "msbsde/grid.hpp"

namespace msbsde {

/// Gauss–Hermite rule for the weight e^{-x^2} (physicists' convention).
/// Nodes ascending; weights sum to sqrt(pi).
struct HermiteRule {
    int L = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Cached L-point rule, 1 <= L <= 64. Nodes by Newton iteration on the
/// orthonormal Hermite recurrence.
const HermiteRule& hermite_rule(int L);

/// Tensor product of a 1-D rule over d dimensions. Node tuple Λ is stored at
/// points[Λ*d .. Λ*d+d) with λ_0 varying fastest.
struct TensorRule {
    int d = 1;
    int L = 0;
    std::vector<double> points;
    std::vector<double> weights;
    /// weights / pi^{d/2}, so a plain weighted sum is the expectation.
    std::vector<double> normalized;

    std::size_t size() const noexcept { return weights.size(); }
};

TensorRule tensor_rule(const HermiteRule& rule, int d);

/// Maps a Brownian increment to the increment of the state variable:
/// X = x + drift * tau + vol * dW, with vol a d x d matrix (row-major).
/// The default is the identity map X = x + dW.
struct ForwardMap {
    int d = 1;
    std::array<double, kMaxDim> drift{};
    std::array<double, kMaxDim * kMaxDim> vol{1.0, 0.0, 0.0, 1.0};

    static ForwardMap brownian(int d);
};

/// Offsets for one layer distance k: state offsets and the matching Brownian
/// increments dW = sqrt(2 k dt) a_Λ, both L^d x d. Identical for every base
/// point on a uniform grid, so they are built once per (k, dt).
struct StencilOffsets {
    int k = 1;
    int d = 1;
    std::vector<double> state;
    std::vector<double> dW;

    std::size_t size() const noexcept { return d == 0 ? 0 : state.size() / static_cast<std::size_t>(d); }
};

StencilOffsets stencil_offsets(const TensorRule& rule, int k, double dt, const ForwardMap& forward);

/// Absolute non-grid evaluation points x_i + sqrt(2 k dt) a_Λ around a base
/// grid point.
struct ShiftedStencil {
    std::int64_t base = 0;
    int k = 1;
    int d = 1;
    std::vector<double> points;

    std::size_t size() const noexcept { return points.size() / static_cast<std::size_t>(d); }
};

ShiftedStencil shifted_points(const SpaceGrid& grid, std::int64_t base, int k, double dt, const TensorRule& rule);

/// pi^{-d/2} * sum_Λ w_Λ v_Λ, summed in index order.
double expectation(std::span<const double> values, const TensorRule& rule);

}  // namespace msbsde
