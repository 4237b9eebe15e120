#include "msbsde/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "msbsde/error.hpp"

namespace msbsde {

namespace {

constexpr int kMaxHermite = 64;

HermiteRule compute_hermite(int n) {
    // pi^{-1/4}, first orthonormal Hermite function coefficient.
    const double pim4 = std::pow(std::numbers::pi, -0.25);
    std::vector<double> x(static_cast<std::size_t>(n));
    std::vector<double> w(static_cast<std::size_t>(n));
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        // Asymptotic initial guesses for the largest roots, then extrapolate.
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * x[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * x[1];
        } else {
            z = 2.0 * z - x[static_cast<std::size_t>(i - 2)];
        }
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt(static_cast<double>(j - 1) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double step = p1 / pp;
            z -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        x[static_cast<std::size_t>(i)] = z;
        x[static_cast<std::size_t>(n - 1 - i)] = -z;
        w[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
        w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
    }
    if (n % 2 == 1) x[static_cast<std::size_t>(n / 2)] = 0.0;

    HermiteRule rule;
    rule.L = n;
    rule.nodes.assign(x.rbegin(), x.rend());
    rule.weights.assign(w.rbegin(), w.rend());
    return rule;
}

}  // namespace

const HermiteRule& hermite_rule(int L) {
    if (L < 1 || L > kMaxHermite) {
        raise(ErrorKind::InvalidArgument, "Gauss-Hermite point count must be in [1, 64], got " + std::to_string(L));
    }
    static std::array<std::once_flag, kMaxHermite + 1> flags;
    static std::array<HermiteRule, kMaxHermite + 1> cache;
    std::call_once(flags[static_cast<std::size_t>(L)], [L] { cache[static_cast<std::size_t>(L)] = compute_hermite(L); });
    return cache[static_cast<std::size_t>(L)];
}

TensorRule tensor_rule(const HermiteRule& rule, int d) {
    if (d < 1 || d > kMaxDim) raise(ErrorKind::InvalidArgument, "tensor rule dimension must be 1 or 2");
    TensorRule t;
    t.d = d;
    t.L = rule.L;
    const std::size_t L = static_cast<std::size_t>(rule.L);
    const std::size_t count = d == 1 ? L : L * L;
    t.points.resize(count * static_cast<std::size_t>(d));
    t.weights.resize(count);
    t.normalized.resize(count);
    const double scale = std::pow(std::numbers::pi, -0.5 * d);
    for (std::size_t idx = 0; idx < count; ++idx) {
        std::size_t rem = idx;
        double w = 1.0;
        for (int k = 0; k < d; ++k) {
            const std::size_t l = rem % L;
            rem /= L;
            t.points[idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)] = rule.nodes[l];
            w *= rule.weights[l];
        }
        t.weights[idx] = w;
        t.normalized[idx] = w * scale;
    }
    return t;
}

ForwardMap ForwardMap::brownian(int d) {
    ForwardMap f;
    f.d = d;
    return f;
}

StencilOffsets stencil_offsets(const TensorRule& rule, int k, double dt, const ForwardMap& forward) {
    if (k < 1) raise(ErrorKind::InvalidArgument, "stencil layer offset k must be >= 1");
    if (forward.d != rule.d) raise(ErrorKind::InvalidArgument, "forward map and rule dimensions differ");
    const int d = rule.d;
    const double tau = k * dt;
    const double shift = std::sqrt(2.0 * tau);
    StencilOffsets s;
    s.k = k;
    s.d = d;
    s.state.resize(rule.points.size());
    s.dW.resize(rule.points.size());
    for (std::size_t idx = 0; idx < rule.size(); ++idx) {
        const double* a = &rule.points[idx * static_cast<std::size_t>(d)];
        double* dw = &s.dW[idx * static_cast<std::size_t>(d)];
        double* st = &s.state[idx * static_cast<std::size_t>(d)];
        for (int c = 0; c < d; ++c) dw[c] = shift * a[c];
        for (int r = 0; r < d; ++r) {
            double acc = forward.drift[static_cast<std::size_t>(r)] * tau;
            for (int c = 0; c < d; ++c) acc += forward.vol[static_cast<std::size_t>(r * kMaxDim + c)] * dw[c];
            st[r] = acc;
        }
    }
    return s;
}

ShiftedStencil shifted_points(const SpaceGrid& grid, std::int64_t base, int k, double dt, const TensorRule& rule) {
    if (rule.d != grid.dim()) raise(ErrorKind::InvalidArgument, "rule and grid dimensions differ");
    const StencilOffsets off = stencil_offsets(rule, k, dt, ForwardMap::brownian(rule.d));
    const Point x = grid.point(base);
    ShiftedStencil s;
    s.base = base;
    s.k = k;
    s.d = rule.d;
    s.points = off.state;
    for (std::size_t idx = 0; idx < off.size(); ++idx) {
        for (int c = 0; c < s.d; ++c) s.points[idx * static_cast<std::size_t>(s.d) + static_cast<std::size_t>(c)] += x[c];
    }
    return s;
}

double expectation(std::span<const double> values, const TensorRule& rule) {
    if (values.size() != rule.size()) {
        raise(ErrorKind::InvalidArgument, "expectation needs " + std::to_string(rule.size()) + " values, got " +
                                              std::to_string(values.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += rule.weights[i] * values[i];
    return acc * std::pow(std::numbers::pi, -0.5 * rule.d);
}

}  // namespace msbsde
