#include "msbsde/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "msbsde/error.hpp"

namespace msbsde {

TimeGrid build_time_grid(double t0, double T, int N) {
    if (!(T > t0) || !std::isfinite(T) || !std::isfinite(t0)) {
        raise(ErrorKind::InvalidArgument, "time grid needs T > t0, got t0=" + std::to_string(t0) +
                                              " T=" + std::to_string(T));
    }
    if (N < 1) {
        raise(ErrorKind::InvalidArgument, "time grid needs N >= 1, got " + std::to_string(N));
    }
    return TimeGrid{t0, T, N, (T - t0) / N};
}

SpaceGrid::SpaceGrid(const Box& box, std::int64_t M) : d_(box.d), lo_(box.lo), hi_(box.hi), M_(M) {
    if (d_ < 1 || d_ > kMaxDim) {
        raise(ErrorKind::InvalidArgument, "space grid dimension must be 1 or 2, got " + std::to_string(d_));
    }
    if (M_ < 2) {
        raise(ErrorKind::InvalidArgument, "space grid needs at least 2 points per dimension");
    }
    for (int k = 0; k < d_; ++k) {
        if (!(lo_[k] < hi_[k])) {
            raise(ErrorKind::InvalidArgument, "space grid needs x_min < x_max in every dimension");
        }
    }
    const double width = hi_[0] - lo_[0];
    for (int k = 1; k < d_; ++k) {
        if (std::abs((hi_[k] - lo_[k]) - width) > 1e-12 * width) {
            raise(ErrorKind::InvalidArgument, "space grid dimensions must share the same width");
        }
    }
    dx_ = width / static_cast<double>(M_ - 1);
    for (int k = 0; k < d_; ++k) {
        auto& c = coords_[k];
        c.resize(static_cast<std::size_t>(M_));
        for (std::int64_t i = 0; i < M_; ++i) c[static_cast<std::size_t>(i)] = lo_[k] + static_cast<double>(i) * dx_;
        c.back() = hi_[k];
    }
}

Point SpaceGrid::point(std::int64_t flat) const noexcept {
    Point p{};
    for (int k = 0; k < d_; ++k) {
        p[k] = coord(k, flat % M_);
        flat /= M_;
    }
    return p;
}

std::int64_t SpaceGrid::flat_index(std::span<const std::int64_t> index) const noexcept {
    std::int64_t flat = 0;
    for (int k = d_ - 1; k >= 0; --k) flat = flat * M_ + index[static_cast<std::size_t>(k)];
    return flat;
}

std::int64_t SpaceGrid::nearest_index(std::span<const double> x) const noexcept {
    std::array<std::int64_t, kMaxDim> idx{};
    for (int k = 0; k < d_; ++k) {
        const double xk = x[static_cast<std::size_t>(k)];
        auto i = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((xk - lo_[k]) / dx_)), 0, M_ - 1);
        if (i + 1 < M_ && std::abs(coord(k, i + 1) - xk) < std::abs(coord(k, i) - xk)) ++i;
        idx[k] = i;
    }
    return flat_index(std::span<const std::int64_t>(idx.data(), static_cast<std::size_t>(d_)));
}

CellLocation locate_cell(const SpaceGrid& grid, std::span<const double> X) noexcept {
    CellLocation loc;
    loc.d = grid.dim();
    const std::int64_t last = grid.M() - 2;
    for (int k = 0; k < loc.d; ++k) {
        const double x = X[static_cast<std::size_t>(k)];
        if (x < grid.x_min(k)) {
            loc.index[k] = 0;
            loc.clamped[k] = true;
            continue;
        }
        if (x > grid.x_max(k)) {
            loc.index[k] = last;
            loc.clamped[k] = true;
            continue;
        }
        auto i = static_cast<std::int64_t>((x - grid.x_min(k)) / grid.dx());
        i = std::min(i, last);
        // The quotient can be off by one ulp near a knot; settle against the
        // stored coordinates so x_i <= X <= x_{i+1} holds exactly.
        if (i > 0 && x < grid.coord(k, i)) --i;
        if (i < last && x >= grid.coord(k, i + 1)) ++i;
        loc.index[k] = i;
        loc.clamped[k] = false;
    }
    return loc;
}

double balanced_spacing(double dt, int K_y, int K_z, int r) {
    if (!(dt > 0.0)) raise(ErrorKind::InvalidArgument, "balance needs dt > 0");
    if (r < 1) raise(ErrorKind::InvalidArgument, "interpolation order r must be >= 1");
    if (K_y < 1 || K_z < 1) raise(ErrorKind::InvalidArgument, "step counts K_y, K_z must be >= 1");
    const int q = std::min(K_y + 1, K_z);
    return std::pow(dt, static_cast<double>(q + 1) / static_cast<double>(r));
}

SpaceGrid balance_space_grid(double dt, int K_y, int K_z, int r, const Box& box, const GridLimits& limits) {
    const double target = balanced_spacing(dt, K_y, K_z, r);
    const double width = box.width(0);
    if (!(width > 0.0)) raise(ErrorKind::InvalidArgument, "domain box must have positive width");
    // Relative slack absorbs pow() rounding when width/target is an exact integer.
    const double ratio = width / target * (1.0 - 1e-12);
    const double half_intervals = std::ceil(ratio / 2.0);
    const double M_real = 2.0 * half_intervals + 1.0;
    const double total = box.d == 1 ? M_real : M_real * M_real;
    if (!(total <= static_cast<double>(limits.max_points))) {
        raise(ErrorKind::ResourceLimit, "balanced grid needs M=" + std::to_string(static_cast<long long>(M_real)) +
                                            " points per dimension (" + std::to_string(total) +
                                            " total), above the cap of " + std::to_string(limits.max_points));
    }
    return SpaceGrid(box, static_cast<std::int64_t>(M_real));
}

}  // namespace msbsde
