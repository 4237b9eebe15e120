#pragma once

#include <span>
#include <vector>

#include "msbsde/grid.hpp"
#include "msbsde/spline.hpp"

namespace msbsde {

/// Interpolant of one scalar field on a 1-D or 2-D grid: a not-a-knot cubic
/// spline for d = 1, bicubic patches with finite-difference derivatives for
/// d = 2.
struct Interpolant {
    int d = 1;
    CubicSplineCoeffs cubic;
    BicubicCoeffs bicubic;
};

Interpolant build_interpolant(std::span<const double> samples, const SpaceGrid& grid);

/// Scalar evaluation at X (d coordinates), clamped to the grid box.
double evaluate(const Interpolant& s, const double* X) noexcept;

/// Interpolants of all components stored for one time layer.
using CoefficientSet = std::vector<Interpolant>;

}  // namespace msbsde
