#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "msbsde/grid.hpp"

namespace msbsde {

/// Piecewise cubic on a uniform 1-D grid. Interval j holds
/// s(X) = a + b t + c t^2 + d t^3 with t = X - x_j, stored as
/// coef[4j .. 4j+3] = {a, b, c, d}.
struct CubicSplineCoeffs {
    double x0 = 0.0;
    double x_last = 0.0;
    double dx = 1.0;
    std::int64_t M = 0;
    std::vector<double> coef;

    std::int64_t intervals() const noexcept { return M - 1; }
};

/// Not-a-knot interpolating cubic spline through M >= 4 samples.
CubicSplineCoeffs build_cubic_spline(std::span<const double> samples, const SpaceGrid& grid);

/// Horner evaluation; X outside the grid is clamped to the boundary knot.
double eval_cubic_spline(const CubicSplineCoeffs& s, double X) noexcept;

/// First and mixed derivative fields of an M x M sample field.
struct Derivatives2D {
    std::vector<double> fx;
    std::vector<double> fy;
    std::vector<double> fxy;
};

/// Fourth-order finite differences: 5-point central stencils inside,
/// one-sided 5-point stencils on the two outermost knots. f_xy applies the
/// x stencil first and then the y stencil. Needs M >= 6.
Derivatives2D fd_derivatives_2d(std::span<const double> field, const SpaceGrid& grid);

/// Bicubic Hermite patches on the (M-1)^2 cells of a 2-D grid. Cell
/// (cx, cy) stores 16 coefficients a[i + 4j] of u^i v^j with
/// u = (X0 - x_cx)/dx, v = (X1 - y_cy)/dx in [0, 1].
struct BicubicCoeffs {
    double x0 = 0.0;
    double y0 = 0.0;
    double x_last = 0.0;
    double y_last = 0.0;
    double dx = 1.0;
    std::int64_t M = 0;
    std::vector<double> coef;

    std::int64_t cells_per_dim() const noexcept { return M - 1; }
};

BicubicCoeffs build_bicubic(std::span<const double> field, const Derivatives2D& derivs, const SpaceGrid& grid);

/// fd_derivatives_2d followed by build_bicubic.
BicubicCoeffs build_bicubic(std::span<const double> field, const SpaceGrid& grid);

/// Evaluation with per-dimension clamping to the grid box.
double eval_bicubic(const BicubicCoeffs& s, double X0, double X1) noexcept;

}  // namespace msbsde
