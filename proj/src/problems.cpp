#include "msbsde/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "msbsde/error.hpp"

namespace msbsde {

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

Point StateTransform::physical(double t, const double* w) const noexcept {
    Point X{};
    for (int r = 0; r < d; ++r) {
        double acc = X0[r] + drift[r] * t;
        for (int c = 0; c < d; ++c) acc += vol[static_cast<std::size_t>(r * kMaxDim + c)] * w[c];
        X[r] = acc;
    }
    return X;
}

Box ProblemSpec::domain() const noexcept {
    Box b;
    b.d = d;
    for (int k = 0; k < d; ++k) {
        b.lo[k] = center[k] - half_width;
        b.hi[k] = center[k] + half_width;
    }
    return b;
}

std::array<double, kMaxDim> ProblemSpec::terminal_z(const double* grad) const noexcept {
    std::array<double, kMaxDim> z{};
    for (int c = 0; c < d; ++c) {
        double acc = 0.0;
        for (int r = 0; r < d; ++r) acc += grad[r] * forward.vol[static_cast<std::size_t>(r * kMaxDim + c)];
        z[c] = acc;
    }
    return z;
}

ProblemSpec example1() {
    ProblemSpec p;
    p.name = "ex1";
    p.T = 1.0;
    p.forward = ForwardMap::brownian(1);
    p.driver = [](double, const double*, double y, const double*) { return -y * y * y + 2.5 * y * y - 1.5 * y; };
    const double T = p.T;
    p.terminal = [T](const double* x) {
        const double e = std::exp(x[0] + T);
        return e / (e + 1.0);
    };
    p.terminal_gradient = [T](const double* x, double* grad) {
        const double e = std::exp(x[0] + T);
        grad[0] = e / ((e + 1.0) * (e + 1.0));
    };
    p.analytic = [](double t, const double* x) {
        const double e = std::exp(x[0] + t);
        AnalyticValue v;
        v.y = e / (e + 1.0);
        v.z[0] = e / ((e + 1.0) * (e + 1.0));
        return v;
    };
    return p;
}

ProblemSpec example2() {
    ProblemSpec p;
    p.name = "ex2";
    p.T = 1.0;
    p.forward = ForwardMap::brownian(1);
    p.driver_depends_on_z = true;
    p.driver = [](double t, const double*, double y, const double* z) {
        const double et = std::exp(t * t);
        const double emt = 1.0 / et;
        return 0.5 * (et - 4.0 * t * y - 3.0 * std::exp(t * t - y * emt) + z[0] * z[0] * emt);
    };
    const double T = p.T;
    p.terminal = [T](const double* x) { return std::log(std::sin(x[0]) + 3.0) * std::exp(T * T); };
    p.terminal_gradient = [T](const double* x, double* grad) {
        grad[0] = std::exp(T * T) * std::cos(x[0]) / (std::sin(x[0]) + 3.0);
    };
    p.analytic = [](double t, const double* x) {
        const double et = std::exp(t * t);
        AnalyticValue v;
        v.y = std::log(std::sin(x[0]) + 3.0) * et;
        v.z[0] = et * std::cos(x[0]) / (std::sin(x[0]) + 3.0);
        return v;
    };
    return p;
}

AnalyticValue black_scholes_call(const BlackScholesParams& p, double t, double S) {
    const double tau = p.T - t;
    AnalyticValue v;
    if (tau <= 0.0) {
        v.y = std::max(S - p.strike, 0.0);
        v.z[0] = S > p.strike ? p.sigma * S : (S == p.strike ? 0.5 * p.sigma * S : 0.0);
        return v;
    }
    const double sd = p.sigma * std::sqrt(tau);
    const double d1 = (std::log(S / p.strike) + (p.r - p.delta + 0.5 * p.sigma * p.sigma) * tau) / sd;
    const double d2 = d1 - sd;
    const double carry = std::exp(-p.delta * tau);
    v.y = S * carry * normal_cdf(d1) - p.strike * std::exp(-p.r * tau) * normal_cdf(d2);
    v.z[0] = p.sigma * S * carry * normal_cdf(d1);
    return v;
}

ProblemSpec example_black_scholes(const BlackScholesParams& bs) {
    ProblemSpec p;
    p.name = "bs_call";
    p.T = bs.T;
    p.half_width = 16.0;
    p.forward = ForwardMap::brownian(1);
    StateTransform tr;
    tr.X0[0] = std::log(bs.S0);
    tr.drift[0] = bs.mu - 0.5 * bs.sigma * bs.sigma;
    tr.vol[0] = bs.sigma;
    p.transform = tr;
    p.driver_depends_on_z = true;
    const double lambda = (bs.mu - bs.r + bs.delta) / bs.sigma;
    const double r = bs.r;
    p.driver = [r, lambda](double, const double*, double y, const double* z) { return -(r * y + lambda * z[0]); };
    const double K = bs.strike;
    const double T = bs.T;
    const double sigma = bs.sigma;
    p.terminal = [tr, K, T](const double* w) { return std::max(std::exp(tr.physical(T, w)[0]) - K, 0.0); };
    const double lnK = std::log(K);
    p.terminal_gradient = [tr, lnK, T, sigma](const double* w, double* grad) {
        const double X = tr.physical(T, w)[0];
        const double weight = X > lnK ? 1.0 : (X == lnK ? 0.5 : 0.0);
        grad[0] = weight * sigma * std::exp(X);
    };
    p.analytic = [bs, tr](double t, const double* w) { return black_scholes_call(bs, t, std::exp(tr.physical(t, w)[0])); };
    // X(T, w) = ln K.
    p.kink = Kink{{1.0, 0.0}, (lnK - tr.X0[0] - tr.drift[0] * T) / sigma};
    p.smoothing = true;
    return p;
}

ProblemSpec example4_2d() {
    ProblemSpec p;
    p.name = "ex4_2d";
    p.d = 2;
    p.T = 1.0;
    p.half_width = 8.0;
    p.forward = ForwardMap::brownian(2);
    p.driver_depends_on_z = true;
    p.driver = [](double, const double*, double y, const double* z) { return y - 0.5 * (z[0] + z[1]); };
    const double T = p.T;
    p.terminal = [T](const double* x) { return std::sin(x[0] + x[1] + T); };
    p.terminal_gradient = [T](const double* x, double* grad) {
        grad[0] = grad[1] = std::cos(x[0] + x[1] + T);
    };
    p.analytic = [](double t, const double* x) {
        AnalyticValue v;
        v.y = std::sin(x[0] + x[1] + t);
        v.z[0] = v.z[1] = std::cos(x[0] + x[1] + t);
        return v;
    };
    return p;
}

AnalyticValue margrabe(const SpreadParams& p, double t, double S1, double S2) {
    const double tau = p.T - t;
    const double a11 = p.sigma1;
    const double a21 = p.rho * p.sigma2;
    const double a22 = p.sigma2 * std::sqrt(1.0 - p.rho * p.rho);
    double u1 = 0.0;
    double u2 = 0.0;
    AnalyticValue v;
    if (tau <= 0.0) {
        v.y = std::max(S1 - S2, 0.0);
        const double w = S1 > S2 ? 1.0 : (S1 == S2 ? 0.5 : 0.0);
        u1 = w * S1;
        u2 = -w * S2;
    } else {
        const double vol = std::sqrt(p.sigma1 * p.sigma1 + p.sigma2 * p.sigma2 - 2.0 * p.rho * p.sigma1 * p.sigma2);
        const double sd = vol * std::sqrt(tau);
        const double d1 = (std::log(S1 / S2) + 0.5 * vol * vol * tau) / sd;
        const double d2 = d1 - sd;
        v.y = S1 * normal_cdf(d1) - S2 * normal_cdf(d2);
        u1 = S1 * normal_cdf(d1);
        u2 = -S2 * normal_cdf(d2);
    }
    v.z[0] = u1 * a11 + u2 * a21;
    v.z[1] = u2 * a22;
    return v;
}

ProblemSpec example5_spread(const SpreadParams& sp) {
    ProblemSpec p;
    p.name = "spread";
    p.d = 2;
    p.T = sp.T;
    p.half_width = 8.0;
    p.forward = ForwardMap::brownian(2);
    const double a11 = sp.sigma1;
    const double a21 = sp.rho * sp.sigma2;
    const double a22 = sp.sigma2 * std::sqrt(1.0 - sp.rho * sp.rho);
    StateTransform tr;
    tr.d = 2;
    tr.X0 = {std::log(sp.S1), std::log(sp.S2)};
    tr.drift = {sp.mu1 - 0.5 * sp.sigma1 * sp.sigma1, sp.mu2 - 0.5 * sp.sigma2 * sp.sigma2};
    tr.vol = {a11, 0.0, a21, a22};
    p.transform = tr;
    // Market price of risk theta = A^{-1} (mu - r); the driver is -(r y + z . theta).
    const double th1 = (sp.mu1 - sp.r) / a11;
    const double th2 = ((sp.mu2 - sp.r) - a21 * th1) / a22;
    const double r = sp.r;
    p.driver_depends_on_z = true;
    p.driver = [r, th1, th2](double, const double*, double y, const double* z) {
        return -(r * y + z[0] * th1 + z[1] * th2);
    };
    const double T = sp.T;
    p.terminal = [tr, T](const double* w) {
        const Point X = tr.physical(T, w);
        return std::max(std::exp(X[0]) - std::exp(X[1]), 0.0);
    };
    p.terminal_gradient = [tr, T, a11, a21, a22](const double* w, double* grad) {
        const Point X = tr.physical(T, w);
        const double weight = X[0] > X[1] ? 1.0 : (X[0] == X[1] ? 0.5 : 0.0);
        const double g1 = weight * std::exp(X[0]);
        const double g2 = -weight * std::exp(X[1]);
        grad[0] = g1 * a11 + g2 * a21;
        grad[1] = g2 * a22;
    };
    p.analytic = [sp, tr](double t, const double* w) {
        const Point X = tr.physical(t, w);
        return margrabe(sp, t, std::exp(X[0]), std::exp(X[1]));
    };
    // X1(T, w) = X2(T, w) is the line (a11 - a21) w1 - a22 w2 = (X0_2 + b2 T) - (X0_1 + b1 T).
    p.kink = Kink{{a11 - a21, -a22}, (tr.X0[1] + tr.drift[1] * T) - (tr.X0[0] + tr.drift[0] * T)};
    p.smoothing = true;
    return p;
}

const std::vector<std::string>& problem_names() {
    static const std::vector<std::string> names{"ex1", "ex2", "bs_call", "ex4_2d", "spread"};
    return names;
}

ProblemSpec make_problem(std::string_view name) {
    if (name == "ex1") return example1();
    if (name == "ex2") return example2();
    if (name == "bs_call") return example_black_scholes();
    if (name == "ex4_2d") return example4_2d();
    if (name == "spread") return example5_spread();
    raise(ErrorKind::Config, "unknown problem '" + std::string(name) + "'");
}

}  // namespace msbsde
