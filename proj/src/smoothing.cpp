#include "msbsde/smoothing.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "msbsde/error.hpp"

namespace msbsde {

namespace {

constexpr int kGaussOrder = 8;

struct GaussLegendre {
    std::array<double, kGaussOrder> x{};
    std::array<double, kGaussOrder> w{};
};

// Nodes and weights on [0, 1], Newton on the Legendre recurrence.
const GaussLegendre& unit_rule() {
    static const GaussLegendre rule = [] {
        GaussLegendre r;
        const int n = kGaussOrder;
        for (int i = 0; i < n; ++i) {
            double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0;
                double p1 = z;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (z * p1 - p0) / (z * z - 1.0);
                const double step = p1 / dp;
                z -= step;
                if (std::abs(step) < 1e-16) break;
            }
            r.x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
            r.w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * dp * dp);
        }
        return r;
    }();
    return rule;
}

}  // namespace

double cardinal_bspline(int mu, double t) noexcept {
    const double half = 0.5 * mu;
    if (t <= -half || t >= half) return 0.0;
    // Truncated-power form; mild cancellation is harmless for mu <= 6.
    double acc = 0.0;
    double binom = 1.0;
    for (int j = 0; j <= mu; ++j) {
        const double s = t + half - j;
        if (s > 0.0) acc += ((j % 2 == 0) ? binom : -binom) * std::pow(s, mu - 1);
        binom = binom * (mu - j) / (j + 1);
    }
    double fact = 1.0;
    for (int k = 2; k < mu; ++k) fact *= k;
    return acc / fact;
}

SmoothingKernel::SmoothingKernel(int order) : order_(order) {
    if (order == 4) {
        coeffs_ = {4.0 / 3.0, -1.0 / 6.0};
    } else if (order == 6) {
        coeffs_ = {73.0 / 40.0, -7.0 / 15.0, 13.0 / 240.0};
    } else {
        raise(ErrorKind::InvalidArgument, "smoothing kernel order must be 4 or 6, got " + std::to_string(order));
    }
}

double SmoothingKernel::operator()(double t) const noexcept {
    double acc = coeffs_[0] * cardinal_bspline(order_, t);
    for (std::size_t k = 1; k < coeffs_.size(); ++k) {
        const double kk = static_cast<double>(k);
        acc += coeffs_[k] * (cardinal_bspline(order_, t - kk) + cardinal_bspline(order_, t + kk));
    }
    return acc;
}

std::vector<double> smooth_terminal(std::span<const double> samples, const SpaceGrid& grid, const Kink& kink,
                                    const std::function<double(const double*)>& g, const SmoothingKernel& kernel,
                                    double scale) {
    if (static_cast<std::int64_t>(samples.size()) != grid.size()) {
        raise(ErrorKind::InvalidArgument, "sample count does not match the grid");
    }
    if (!(scale > 0.0)) raise(ErrorKind::InvalidArgument, "smoothing scale must be positive");
    const int d = grid.dim();
    double norm = 0.0;
    for (int k = 0; k < d; ++k) norm += kink.normal[static_cast<std::size_t>(k)] * kink.normal[static_cast<std::size_t>(k)];
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) raise(ErrorKind::InvalidArgument, "kink normal must be nonzero");
    std::array<double, kMaxDim> unit{};
    for (int k = 0; k < d; ++k) unit[static_cast<std::size_t>(k)] = kink.normal[static_cast<std::size_t>(k)] / norm;

    const double h = scale * grid.dx();
    const int R = kernel.support();
    const auto& q = unit_rule();
    std::vector<double> out(samples.begin(), samples.end());

#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t idx = 0; idx < grid.size(); ++idx) {
        const Point x = grid.point(idx);
        double nx = 0.0;
        for (int k = 0; k < d; ++k) nx += kink.normal[static_cast<std::size_t>(k)] * x[k];
        // Signed distance to the kink in kernel units; the argument
        // x - h t unit crosses the kink at t = tk.
        const double tk = (nx - kink.offset) / (norm * h);
        if (std::abs(tk) >= R) continue;

        double acc = 0.0;
        for (int m = -R; m < R; ++m) {
            double cuts[3] = {static_cast<double>(m), static_cast<double>(m + 1), 0.0};
            int pieces = 1;
            if (tk > m && tk < m + 1) {
                cuts[1] = tk;
                cuts[2] = m + 1;
                pieces = 2;
            }
            for (int p = 0; p < pieces; ++p) {
                const double a = cuts[p];
                const double len = cuts[p + 1] - a;
                for (int l = 0; l < kGaussOrder; ++l) {
                    const double t = a + len * q.x[static_cast<std::size_t>(l)];
                    double X[kMaxDim];
                    for (int k = 0; k < d; ++k) X[k] = x[k] - h * t * unit[static_cast<std::size_t>(k)];
                    acc += len * q.w[static_cast<std::size_t>(l)] * kernel(t) * g(X);
                }
            }
        }
        out[static_cast<std::size_t>(idx)] = acc;
    }
    return out;
}

}  // namespace msbsde
