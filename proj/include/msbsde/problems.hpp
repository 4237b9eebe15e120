#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msbsde/grid.hpp"
#include "msbsde/quadrature.hpp"

namespace msbsde {

/// Reference pair (y, z) of a problem with a known solution; z has d
/// components.
struct AnalyticValue {
    double y = 0.0;
    std::array<double, kMaxDim> z{};
};

/// Hyperplane normal . x = offset where the terminal payoff has a kink.
struct Kink {
    std::array<double, kMaxDim> normal{1.0, 0.0};
    double offset = 0.0;
};

/// f(t, x, y, z) with x and z holding d values.
using DriverFn = std::function<double(double t, const double* x, double y, const double* z)>;
/// g(x).
using TerminalFn = std::function<double(const double* x)>;
/// grad[k] = dg/dx_k, d values.
using GradientFn = std::function<void(const double* x, double* grad)>;
using AnalyticFn = std::function<AnalyticValue(double t, const double* x)>;

/// Affine map from the Brownian state w to the physical state,
/// X(t, w) = X0 + drift * t + vol * w (vol row-major d x d). Problems with a
/// geometric forward process are posed in w, so the grid lives on the
/// Brownian scale and X only enters through f, g and the reference.
struct StateTransform {
    int d = 1;
    std::array<double, kMaxDim> X0{};
    std::array<double, kMaxDim> drift{};
    std::array<double, kMaxDim * kMaxDim> vol{1.0, 0.0, 0.0, 1.0};

    Point physical(double t, const double* w) const noexcept;
};

/// A decoupled BSDE with m = 1 on the grid variable x. The stencil moves x
/// by the forward map (the identity for all built-in problems) and
/// z = grad_x u * vol, so the terminal z follows from the terminal gradient.
struct ProblemSpec {
    std::string name;
    int m = 1;
    int d = 1;
    double t0 = 0.0;
    double T = 1.0;
    /// Box centre, which is also the default evaluation point.
    Point center{};
    double half_width = 16.0;
    ForwardMap forward;
    StateTransform transform;
    DriverFn driver;
    TerminalFn terminal;
    GradientFn terminal_gradient;
    std::optional<AnalyticFn> analytic;
    std::optional<Kink> kink;
    bool smoothing = false;
    bool driver_depends_on_z = false;

    Box domain() const noexcept;

    /// z at the terminal time from the (possibly smoothed) gradient.
    std::array<double, kMaxDim> terminal_z(const double* grad) const noexcept;
};

ProblemSpec example1();
ProblemSpec example2();

/// European call with X = ln S = ln S0 + (mu - sigma^2/2) t + sigma w, posed
/// on the Brownian state w. Parameters default to
/// T = 0.33, K = S0 = 100, r = 0.03, mu = 0.05, delta = 0.04, sigma = 0.2.
struct BlackScholesParams {
    double T = 0.33;
    double S0 = 100.0;
    double strike = 100.0;
    double r = 0.03;
    double mu = 0.05;
    double delta = 0.04;
    double sigma = 0.2;
};

ProblemSpec example_black_scholes(const BlackScholesParams& p = {});

/// Dividend-adjusted Black-Scholes call value and its delta times S.
AnalyticValue black_scholes_call(const BlackScholesParams& p, double t, double S);

ProblemSpec example4_2d();

/// Exchange option on two assets; (ln S1, ln S2) = X0 + drift t + A w with
/// A = [[sigma1, 0], [rho sigma2, sigma2 sqrt(1 - rho^2)]], posed on w.
struct SpreadParams {
    double T = 1.0;
    double S1 = 100.0;
    double S2 = 100.0;
    double r = 0.05;
    double mu1 = 0.1;
    double mu2 = 0.1;
    double sigma1 = 0.25;
    double sigma2 = 0.3;
    double rho = 0.0;
};

ProblemSpec example5_spread(const SpreadParams& p = {});

/// Margrabe price and z = grad_{ln S} u * A at (t, S1, S2).
AnalyticValue margrabe(const SpreadParams& p, double t, double S1, double S2);

/// Names accepted by make_problem: ex1, ex2, bs_call, ex4_2d, spread.
const std::vector<std::string>& problem_names();

/// Throws a config error for unknown names.
ProblemSpec make_problem(std::string_view name);

double normal_cdf(double x) noexcept;

}  // namespace msbsde
