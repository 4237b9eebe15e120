#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace msbsde {

/// Tensor grids, splines and stencils are implemented for d = 1 and d = 2.
inline constexpr int kMaxDim = 2;

using Point = std::array<double, kMaxDim>;

/// Uniform partition of [t0, T] into N steps.
struct TimeGrid {
    double t0 = 0.0;
    double T = 1.0;
    int N = 1;
    double dt = 1.0;

    double time(int n) const noexcept { return t0 + n * dt; }
};

TimeGrid build_time_grid(double t0, double T, int N);

/// Axis-aligned box [lo, hi] in d dimensions.
struct Box {
    int d = 1;
    Point lo{};
    Point hi{};

    double width(int k) const noexcept { return hi[k] - lo[k]; }
};

/// Uniform tensor grid with M points per dimension and the same spacing in
/// every dimension. Flat point index i = i0 + M * i1.
class SpaceGrid {
public:
    SpaceGrid(const Box& box, std::int64_t M);

    int dim() const noexcept { return d_; }
    std::int64_t M() const noexcept { return M_; }
    double dx() const noexcept { return dx_; }
    double x_min(int k) const noexcept { return lo_[k]; }
    double x_max(int k) const noexcept { return hi_[k]; }
    Box box() const noexcept { return Box{d_, lo_, hi_}; }

    /// Number of grid points, M^d.
    std::int64_t size() const noexcept { return d_ == 1 ? M_ : M_ * M_; }

    /// Stored knot coordinate x_i in dimension k.
    double coord(int k, std::int64_t i) const noexcept { return coords_[k][static_cast<std::size_t>(i)]; }
    std::span<const double> coords(int k) const noexcept { return coords_[k]; }

    Point point(std::int64_t flat) const noexcept;
    std::int64_t flat_index(std::span<const std::int64_t> index) const noexcept;

    /// Grid point closest to x (ties go to the lower index).
    std::int64_t nearest_index(std::span<const double> x) const noexcept;

private:
    int d_;
    Point lo_;
    Point hi_;
    std::int64_t M_;
    double dx_;
    std::array<std::vector<double>, kMaxDim> coords_;
};

/// Per-dimension left knot of the cell holding a point.
struct CellLocation {
    int d = 1;
    std::array<std::int64_t, kMaxDim> index{};
    std::array<bool, kMaxDim> clamped{};
};

/// O(d) localization by truncating (X - x_min)/dx. Coordinates outside
/// [x_min, x_max] land in the boundary cell with the clamped flag set.
CellLocation locate_cell(const SpaceGrid& grid, std::span<const double> X) noexcept;

struct GridLimits {
    std::int64_t max_points = std::int64_t{1} << 26;
};

/// Balances the space step against the time step so that
/// dx^r = dt^(q+1) with q = min(K_y + 1, K_z). The interval count per
/// dimension is rounded up to an even number, so the box centre is a knot.
SpaceGrid balance_space_grid(double dt, int K_y, int K_z, int r, const Box& box,
                             const GridLimits& limits = {});

/// Target spacing dt^((q+1)/r) before rounding.
double balanced_spacing(double dt, int K_y, int K_z, int r);

}  // namespace msbsde
