#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msbsde/grid.hpp"
#include "msbsde/history.hpp"
#include "msbsde/interpolant.hpp"
#include "msbsde/problems.hpp"
#include "msbsde/quadrature.hpp"

namespace msbsde {

inline constexpr int kMaxSteps = 6;

/// Reduced fraction with positive denominator.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Rational&, const Rational&) = default;
};

Rational make_rational(std::int64_t num, std::int64_t den);
Rational operator+(const Rational& a, const Rational& b);

/// Multistep weights. gamma_y[j] weights f at t_{n+j} over K_y steps;
/// gamma_z[j] weights layer n+j over the first step.
struct SchemeWeights {
    int K_y = 1;
    int K_z = 1;
    std::vector<Rational> gamma_y_exact;
    std::vector<Rational> gamma_z_exact;
    std::vector<double> gamma_y;
    std::vector<double> gamma_z;
};

/// 1 <= K_y, K_z <= 6.
SchemeWeights scheme_weights(int K_y, int K_z);

/// y and z of one time layer for m = 1. z is component-major:
/// z[c * points + i].
struct LayerValues {
    int n = 0;
    int d = 1;
    std::vector<double> y;
    std::vector<double> z;

    std::size_t points() const noexcept { return y.size(); }
    double z_at(int c, std::size_t i) const noexcept { return z[static_cast<std::size_t>(c) * y.size() + i]; }
};

/// Conditional expectations needed for one grid point. Entry j - 1 of Ef,
/// Ez and EfdW belongs to layer n + j; Ez and EfdW hold d components per
/// layer at stride kMaxDim.
struct CondExpBundle {
    int d = 1;
    int K_y = 1;
    int K_z = 1;
    double Ey_far = 0.0;
    std::array<double, kMaxSteps> Ef{};
    std::array<double, kMaxSteps * kMaxDim> Ez{};
    std::array<double, kMaxSteps * kMaxDim> EfdW{};
};

/// Offsets and weights for layer distances k = 1..K at one time step.
/// wdW[k-1][c] holds normalized weight times the Brownian increment.
struct StencilSet {
    TensorRule rule;
    double dt = 0.0;
    int K = 1;
    std::vector<StencilOffsets> offsets;
    std::vector<std::array<std::vector<double>, kMaxDim>> wdW;
};

StencilSet make_stencils(const TensorRule& rule, double dt, int K, const ForwardMap& forward);

/// Per-thread scratch for conditional_expectations.
struct Workspace {
    std::vector<double> X;
    std::vector<double> y;
    std::array<std::vector<double>, kMaxDim> z;
    std::vector<double> f;

    explicit Workspace(std::size_t stencil_points = 0, int d = 1);
};

/// y and z coefficient histories; position j - 1 is layer n + j.
using LayerHistory = SplineHistory<CoefficientSet>;

/// Merged pass over the stencil of each layer offset j: interpolated
/// y and z, the driver at the shifted points, and all weighted sums.
/// A non-finite driver value raises a numerical-domain error naming
/// (t, x, y, z).
CondExpBundle conditional_expectations(const StencilSet& stencils, const LayerHistory& y_hist,
                                       const LayerHistory& z_hist, const SchemeWeights& weights,
                                       const ProblemSpec& problem, const double* x, double t_n, Workspace& ws);

/// Explicit z update, one value per Brownian component.
std::array<double, kMaxDim> step_z(const CondExpBundle& bundle, const SchemeWeights& weights);

struct PicardOutcome {
    double y = 0.0;
    int iterations = 0;
    double last_change = 0.0;
};

/// Fixed-point iteration for the implicit y update, starting from Ey_far.
/// Stops after p_max iterations or once the change is at most tol.
PicardOutcome step_y_picard(const CondExpBundle& bundle, const SchemeWeights& weights, const double* z,
                            const ProblemSpec& problem, double t_n, const double* x, double dt, int p_max,
                            double tol);

struct SolverConfig {
    int K_y = 3;
    int K_z = 3;
    int N = 64;
    int L = 32;
    int picard_max = 30;
    double picard_tol = 1e-14;
    /// Worker threads for the grid sweep; 0 uses the OpenMP default.
    int threads = 0;
    int r = 4;
    /// Box relative to the problem centre in every dimension; defaults to
    /// +- half_width.
    std::optional<std::array<double, 2>> domain;
    /// Overrides the problem's smoothing flag.
    std::optional<bool> smoothing;
    int smoothing_order = 6;
    /// Kernel width in units of dx. Unset picks the larger of 4 dx and 1.25
    /// times the central Gauss-Hermite node spacing, pi sqrt(dt / L).
    std::optional<double> smoothing_scale;
    GridLimits limits;
    /// Cap on the total number of fine bootstrap steps.
    std::int64_t max_bootstrap_steps = std::int64_t{1} << 16;
    /// Bootstrap sub-intervals per coarse step for the multistep stage.
    int bootstrap_substeps = 16;
    /// Bootstrap grid refinement factor; 0 picks ceil(steps^(1/r)).
    int bootstrap_refine = 0;
    /// Evaluation point; defaults to the problem centre.
    std::optional<Point> eval_point;
};

/// Validates ranges; throws invalid-argument.
void validate(const SolverConfig& config);

SpaceGrid make_space_grid(const ProblemSpec& problem, const SolverConfig& config, double dt);

/// Absolute smoothing kernel width for time step dt and spacing dx.
double smoothing_width(const SolverConfig& config, double dt, double dx);

/// Terminal layer y = g, z = grad g * vol, smoothed near the kink with the
/// given kernel width when enabled.
LayerValues terminal_layer(const ProblemSpec& problem, const SpaceGrid& grid, const SolverConfig& config,
                           double width);

struct StageTimes {
    double interp = 0.0;
    double expect = 0.0;
    double update = 0.0;
    double bootstrap = 0.0;
    double total = 0.0;
};

struct PicardStats {
    std::int64_t points = 0;
    std::int64_t iterations = 0;
    int max_iterations = 0;
    std::int64_t unconverged = 0;

    double average() const noexcept { return points == 0 ? 0.0 : static_cast<double>(iterations) / points; }
};

struct SweepCounters {
    std::int64_t y_builds = 0;
    std::int64_t z_builds = 0;
    std::int64_t layers = 0;
};

/// Layers N-1, N-2, .. N-K+1 in computation order; empty when K = 1.
/// The one-step scheme with step min(dt^2, dt^((K_y+1)/2)) covers the first
/// K-1 sub-intervals of length dt / bootstrap_substeps, then the (K_y, K_z)
/// scheme runs on those sub-intervals. Both stages use a nested grid
/// refined by bootstrap_refine.
std::vector<LayerValues> bootstrap_initial_layers(const ProblemSpec& problem, const TimeGrid& time,
                                                  const SpaceGrid& grid, const SolverConfig& config,
                                                  PicardStats* stats = nullptr);

struct SolveResult {
    double y0 = 0.0;
    std::array<double, kMaxDim> z0{};
    std::int64_t eval_index = 0;
    Point eval_point{};
    int N = 0;
    std::int64_t M = 0;
    double dt = 0.0;
    double dx = 0.0;
    StageTimes times;
    PicardStats picard;
    SweepCounters counters;
    LayerValues layer0;
    std::vector<std::string> warnings;
};

SolveResult solve_backward(const ProblemSpec& problem, const SolverConfig& config);

}  // namespace msbsde
