#include "msbsde/spline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "msbsde/error.hpp"
#include "msbsde/tridiagonal.hpp"

namespace msbsde {

CubicSplineCoeffs build_cubic_spline(std::span<const double> samples, const SpaceGrid& grid) {
    if (grid.dim() != 1) raise(ErrorKind::InvalidArgument, "cubic spline needs a 1-D grid");
    const std::int64_t M = grid.M();
    if (M < 4) raise(ErrorKind::InvalidArgument, "not-a-knot spline needs at least 4 knots, got " + std::to_string(M));
    if (static_cast<std::int64_t>(samples.size()) != M) {
        raise(ErrorKind::InvalidArgument, "cubic spline expects " + std::to_string(M) + " samples");
    }
    const auto n = static_cast<std::size_t>(M - 1);
    const double h = grid.dx();

    // Unknowns are h^2 * s''(x_j) for j = 1..n-1. Substituting the
    // not-a-knot relations s''_0 = 2 s''_1 - s''_2 (and its mirror) into the
    // first and last continuity rows decouples them to 6 s''_j = r_j.
    const std::size_t m = n - 1;
    TridiagonalSystem sys;
    sys.sub.assign(m, 1.0);
    sys.main.assign(m, 4.0);
    sys.super.assign(m, 1.0);
    sys.rhs.resize(m);
    for (std::size_t j = 1; j <= m; ++j) {
        sys.rhs[j - 1] = 6.0 * (samples[j - 1] - 2.0 * samples[j] + samples[j + 1]);
    }
    sys.main.front() = 6.0;
    sys.super.front() = 0.0;
    sys.main.back() = 6.0;
    sys.sub.back() = 0.0;
    const std::vector<double> inner = solve_tridiagonal(sys);

    std::vector<double> sigma(n + 1);
    for (std::size_t j = 1; j <= m; ++j) sigma[j] = inner[j - 1] / (h * h);
    sigma[0] = 2.0 * sigma[1] - sigma[2];
    sigma[n] = 2.0 * sigma[n - 1] - sigma[n - 2];

    CubicSplineCoeffs s;
    s.x0 = grid.x_min(0);
    s.x_last = grid.x_max(0);
    s.dx = h;
    s.M = M;
    s.coef.resize(4 * n);
    for (std::size_t j = 0; j < n; ++j) {
        double* c = &s.coef[4 * j];
        c[0] = samples[j];
        c[1] = (samples[j + 1] - samples[j]) / h - h * (2.0 * sigma[j] + sigma[j + 1]) / 6.0;
        c[2] = 0.5 * sigma[j];
        c[3] = (sigma[j + 1] - sigma[j]) / (6.0 * h);
    }
    return s;
}

double eval_cubic_spline(const CubicSplineCoeffs& s, double X) noexcept {
    const double x = std::clamp(X, s.x0, s.x_last);
    auto j = static_cast<std::int64_t>((x - s.x0) / s.dx);
    j = std::min(j, s.M - 2);
    const double t = x - (s.x0 + static_cast<double>(j) * s.dx);
    const double* c = &s.coef[static_cast<std::size_t>(4 * j)];
    return c[0] + t * (c[1] + t * (c[2] + t * c[3]));
}

namespace {

// Fourth-order first derivative along one grid line.
void fd_line(const double* f, std::int64_t stride, std::int64_t M, double h, double* out) {
    const double inv = 1.0 / (12.0 * h);
    auto at = [&](std::int64_t i) { return f[i * stride]; };
    out[0] = (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) * inv;
    out[stride] = (-3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)) * inv;
    for (std::int64_t i = 2; i < M - 2; ++i) {
        out[i * stride] = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) * inv;
    }
    const std::int64_t e = M - 1;
    out[(e - 1) * stride] = (3.0 * at(e) + 10.0 * at(e - 1) - 18.0 * at(e - 2) + 6.0 * at(e - 3) - at(e - 4)) * inv;
    out[e * stride] = (25.0 * at(e) - 48.0 * at(e - 1) + 36.0 * at(e - 2) - 16.0 * at(e - 3) + 3.0 * at(e - 4)) * inv;
}

}  // namespace

Derivatives2D fd_derivatives_2d(std::span<const double> field, const SpaceGrid& grid) {
    if (grid.dim() != 2) raise(ErrorKind::InvalidArgument, "finite-difference derivatives need a 2-D grid");
    const std::int64_t M = grid.M();
    if (M < 6) raise(ErrorKind::InvalidArgument, "finite-difference stencils need M >= 6, got " + std::to_string(M));
    if (static_cast<std::int64_t>(field.size()) != M * M) {
        raise(ErrorKind::InvalidArgument, "field size does not match the grid");
    }
    const double h = grid.dx();
    Derivatives2D d;
    d.fx.resize(field.size());
    d.fy.resize(field.size());
    d.fxy.resize(field.size());
    for (std::int64_t row = 0; row < M; ++row) {
        fd_line(field.data() + row * M, 1, M, h, d.fx.data() + row * M);
    }
    for (std::int64_t col = 0; col < M; ++col) {
        fd_line(field.data() + col, M, M, h, d.fy.data() + col);
        fd_line(d.fx.data() + col, M, M, h, d.fxy.data() + col);
    }
    return d;
}

BicubicCoeffs build_bicubic(std::span<const double> field, const Derivatives2D& derivs, const SpaceGrid& grid) {
    if (grid.dim() != 2) raise(ErrorKind::InvalidArgument, "bicubic interpolation needs a 2-D grid");
    const std::int64_t M = grid.M();
    const auto total = static_cast<std::size_t>(M * M);
    if (field.size() != total || derivs.fx.size() != total || derivs.fy.size() != total || derivs.fxy.size() != total) {
        raise(ErrorKind::InvalidArgument, "bicubic inputs do not match the grid");
    }
    const double h = grid.dx();
    const double h2 = h * h;
    constexpr std::array<std::array<double, 4>, 4> L{{
        {1.0, 0.0, 0.0, 0.0},
        {0.0, 0.0, 1.0, 0.0},
        {-3.0, 3.0, -2.0, -1.0},
        {2.0, -2.0, 1.0, 1.0},
    }};

    BicubicCoeffs s;
    s.x0 = grid.x_min(0);
    s.y0 = grid.x_min(1);
    s.x_last = grid.x_max(0);
    s.y_last = grid.x_max(1);
    s.dx = h;
    s.M = M;
    const std::int64_t C = M - 1;
    s.coef.resize(static_cast<std::size_t>(16 * C * C));

    for (std::int64_t cy = 0; cy < C; ++cy) {
        for (std::int64_t cx = 0; cx < C; ++cx) {
            // F rows: value at u=0, u=1, d/du at 0, d/du at 1; columns likewise in v.
            std::array<std::array<double, 4>, 4> F{};
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    const auto p = static_cast<std::size_t>((cx + a) + M * (cy + b));
                    F[a][b] = field[p];
                    F[a][2 + b] = derivs.fy[p] * h;
                    F[2 + a][b] = derivs.fx[p] * h;
                    F[2 + a][2 + b] = derivs.fxy[p] * h2;
                }
            }
            std::array<std::array<double, 4>, 4> LF{};
            for (int i = 0; i < 4; ++i)
                for (int k = 0; k < 4; ++k) {
                    double acc = 0.0;
                    for (int q = 0; q < 4; ++q) acc += L[i][q] * F[q][k];
                    LF[i][k] = acc;
                }
            double* out = &s.coef[static_cast<std::size_t>(16 * (cx + C * cy))];
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) {
                    double acc = 0.0;
                    for (int q = 0; q < 4; ++q) acc += LF[i][q] * L[j][q];
                    out[i + 4 * j] = acc;
                }
        }
    }
    return s;
}

BicubicCoeffs build_bicubic(std::span<const double> field, const SpaceGrid& grid) {
    return build_bicubic(field, fd_derivatives_2d(field, grid), grid);
}

double eval_bicubic(const BicubicCoeffs& s, double X0, double X1) noexcept {
    const double x = std::clamp(X0, s.x0, s.x_last);
    const double y = std::clamp(X1, s.y0, s.y_last);
    const std::int64_t last = s.M - 2;
    const std::int64_t cx = std::min(static_cast<std::int64_t>((x - s.x0) / s.dx), last);
    const std::int64_t cy = std::min(static_cast<std::int64_t>((y - s.y0) / s.dx), last);
    const double u = (x - (s.x0 + static_cast<double>(cx) * s.dx)) / s.dx;
    const double v = (y - (s.y0 + static_cast<double>(cy) * s.dx)) / s.dx;
    const double* a = &s.coef[static_cast<std::size_t>(16 * (cx + (s.M - 1) * cy))];
    double acc = 0.0;
    for (int j = 3; j >= 0; --j) {
        const double* col = a + 4 * j;
        acc = acc * v + (col[0] + u * (col[1] + u * (col[2] + u * col[3])));
    }
    return acc;
}

}  // namespace msbsde
