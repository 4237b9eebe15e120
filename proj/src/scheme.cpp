#include "msbsde/scheme.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "msbsde/error.hpp"
#include "msbsde/kernels.hpp"
#include "msbsde/smoothing.hpp"

namespace msbsde {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct RationalEntry {
    std::int64_t num;
    std::int64_t den;
};

// Rows K = 1..6, entries j = 0..K.
const std::array<std::vector<RationalEntry>, kMaxSteps> kGammaY{{
    {{1, 2}, {1, 2}},
    {{1, 6}, {2, 3}, {1, 6}},
    {{1, 8}, {3, 8}, {3, 8}, {1, 8}},
    {{1, 12}, {1, 3}, {1, 6}, {1, 3}, {1, 12}},
    {{41, 600}, {19, 75}, {107, 600}, {107, 600}, {19, 75}, {41, 600}},
    {{19, 336}, {3, 14}, {15, 112}, {4, 21}, {15, 112}, {3, 14}, {19, 336}},
}};

const std::array<std::vector<RationalEntry>, kMaxSteps> kGammaZ{{
    {{1, 2}, {1, 2}},
    {{5, 12}, {2, 3}, {-1, 12}},
    {{3, 8}, {19, 24}, {-5, 24}, {1, 24}},
    {{35, 96}, {5, 6}, {-13, 48}, {1, 12}, {-1, 96}},
    {{131, 360}, {151, 180}, {-103, 360}, {37, 360}, {-1, 45}, {1, 360}},
    {{163, 448}, {47, 56}, {-129, 448}, {3, 28}, {-37, 1344}, {1, 168}, {-1, 1344}},
}};

void eval_on_stencil(const Interpolant& s, const double* x, const StencilOffsets& off, double* out) {
    if (s.d == 1) {
        kernels::cubic_shifted(s.cubic, x[0], off.state.data(), off.size(), out);
    } else {
        kernels::bicubic_shifted(s.bicubic, x[0], x[1], off.state.data(), off.size(), out);
    }
}

struct LayerSets {
    CoefficientSet y;
    CoefficientSet z;
};

LayerSets build_sets(const LayerValues& layer, const SpaceGrid& grid, SweepCounters& counters) {
    LayerSets sets;
    sets.y.push_back(build_interpolant(layer.y, grid));
    const std::size_t P = layer.points();
    for (int c = 0; c < layer.d; ++c) {
        sets.z.push_back(
            build_interpolant(std::span<const double>(layer.z).subspan(static_cast<std::size_t>(c) * P, P), grid));
    }
    ++counters.y_builds;
    ++counters.z_builds;
    return sets;
}

int resolve_threads(int requested) { return requested > 0 ? requested : omp_get_max_threads(); }

struct PointFailure {
    std::int64_t index = -1;
    ErrorKind kind = ErrorKind::NumericalDomain;
    std::string message;

    void record(std::int64_t i, ErrorKind k, const std::string& msg) {
#pragma omp critical(msbsde_point_failure)
        {
            if (index < 0 || i < index) {
                index = i;
                kind = k;
                message = msg;
            }
        }
    }

    void rethrow(int n, const SpaceGrid& grid) const {
        if (index < 0) return;
        const Point x = grid.point(index);
        std::ostringstream os;
        os << message << " (layer " << n << ", point " << index << " at x = (" << x[0];
        if (grid.dim() == 2) os << ", " << x[1];
        os << "))";
        // Strip the kind prefix that Error already added to the message.
        std::string text = os.str();
        const std::string prefix = std::string(to_string(kind)) + ": ";
        if (text.rfind(prefix, 0) == 0) text.erase(0, prefix.size());
        raise(kind, text);
    }
};

struct LayerStepper {
    const ProblemSpec& problem;
    const SpaceGrid& grid;
    const StencilSet& stencils;
    const SchemeWeights& weights;
    const SolverConfig& config;
    int threads;
    std::vector<CondExpBundle> bundles;
    std::vector<int> iterations;
    std::vector<double> changes;

    LayerStepper(const ProblemSpec& p, const SpaceGrid& g, const StencilSet& s, const SchemeWeights& w,
                 const SolverConfig& c)
        : problem(p), grid(g), stencils(s), weights(w), config(c), threads(resolve_threads(c.threads)) {
        const auto P = static_cast<std::size_t>(grid.size());
        bundles.resize(P);
        iterations.resize(P);
        changes.resize(P);
    }

    // Computes layer n at time t_n from the histories.
    void advance(int n, double t_n, const LayerHistory& y_hist, const LayerHistory& z_hist, LayerValues& out,
                 StageTimes& times, PicardStats& stats, std::vector<std::string>& warnings) {
        const std::int64_t P = grid.size();
        const int d = problem.d;
        out.n = n;
        out.d = d;
        out.y.assign(static_cast<std::size_t>(P), 0.0);
        out.z.assign(static_cast<std::size_t>(P) * static_cast<std::size_t>(d), 0.0);

        PointFailure failure;
        auto start = Clock::now();
#pragma omp parallel num_threads(threads)
        {
            Workspace ws(stencils.rule.size(), d);
#pragma omp for schedule(static)
            for (std::int64_t i = 0; i < P; ++i) {
                try {
                    const Point x = grid.point(i);
                    bundles[static_cast<std::size_t>(i)] =
                        conditional_expectations(stencils, y_hist, z_hist, weights, problem, x.data(), t_n, ws);
                } catch (const Error& e) {
                    failure.record(i, e.kind(), e.what());
                } catch (const std::exception& e) {
                    failure.record(i, ErrorKind::NumericalDomain, e.what());
                }
            }
        }
        failure.rethrow(n, grid);
        times.expect += seconds_since(start);

        start = Clock::now();
#pragma omp parallel for num_threads(threads) schedule(static)
        for (std::int64_t i = 0; i < P; ++i) {
            const auto u = static_cast<std::size_t>(i);
            try {
                const Point x = grid.point(i);
                const auto z = step_z(bundles[u], weights);
                const PicardOutcome py = step_y_picard(bundles[u], weights, z.data(), problem, t_n, x.data(),
                                                       stencils.dt, config.picard_max, config.picard_tol);
                if (!std::isfinite(py.y)) {
                    std::ostringstream os;
                    os << "non-finite y at t = " << t_n;
                    raise(ErrorKind::NumericalDomain, os.str());
                }
                out.y[u] = py.y;
                for (int c = 0; c < d; ++c) out.z[static_cast<std::size_t>(c) * static_cast<std::size_t>(P) + u] = z[c];
                iterations[u] = py.iterations;
                changes[u] = py.last_change;
            } catch (const Error& e) {
                failure.record(i, e.kind(), e.what());
            } catch (const std::exception& e) {
                failure.record(i, ErrorKind::NumericalDomain, e.what());
            }
        }
        failure.rethrow(n, grid);
        times.update += seconds_since(start);

        std::int64_t unconverged = 0;
        for (std::int64_t i = 0; i < P; ++i) {
            const auto u = static_cast<std::size_t>(i);
            stats.iterations += iterations[u];
            stats.max_iterations = std::max(stats.max_iterations, iterations[u]);
            if (iterations[u] >= config.picard_max && changes[u] > 1e-6) ++unconverged;
        }
        stats.points += P;
        stats.unconverged += unconverged;
        if (unconverged > 0) {
            std::ostringstream os;
            os << "Picard iteration did not settle at " << unconverged << " points of layer " << n << " after "
               << config.picard_max << " iterations";
            warnings.push_back(os.str());
        }
    }
};


// Nested refinement factor for the bootstrap grid. The one-step scheme
// interpolates once per fine step, so its spatial error grows with the
// number of steps; refining by steps^(1/r) keeps the accumulated error at
// the level of a single coarse interpolation.
std::int64_t bootstrap_refinement(const SolverConfig& config, std::int64_t steps) {
    if (config.bootstrap_refine > 0) return config.bootstrap_refine;
    const double rho = std::pow(static_cast<double>(steps), 1.0 / config.r);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(rho * (1.0 - 1e-12))));
}

// Values of a nested fine layer at the coarse knots.
LayerValues restrict_layer(const LayerValues& fine, const SpaceGrid& fine_grid, const SpaceGrid& grid,
                           std::int64_t rho) {
    if (rho == 1) return fine;
    const int d = fine.d;
    const auto P = static_cast<std::size_t>(grid.size());
    const auto Pf = static_cast<std::size_t>(fine_grid.size());
    LayerValues out;
    out.n = fine.n;
    out.d = d;
    out.y.resize(P);
    out.z.resize(P * static_cast<std::size_t>(d));
    const std::int64_t M = grid.M();
    for (std::size_t i = 0; i < P; ++i) {
        std::int64_t idx[kMaxDim] = {static_cast<std::int64_t>(i) % M, static_cast<std::int64_t>(i) / M};
        for (int k = 0; k < d; ++k) idx[k] *= rho;
        const auto f = static_cast<std::size_t>(fine_grid.flat_index(std::span<const std::int64_t>(idx, static_cast<std::size_t>(d))));
        out.y[i] = fine.y[f];
        for (int c = 0; c < d; ++c) out.z[static_cast<std::size_t>(c) * P + i] = fine.z[static_cast<std::size_t>(c) * Pf + f];
    }
    return out;
}

}  // namespace

Rational make_rational(std::int64_t num, std::int64_t den) {
    if (den == 0) raise(ErrorKind::InvalidArgument, "zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num, den);
    return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
}

Rational operator+(const Rational& a, const Rational& b) {
    const std::int64_t l = std::lcm(a.den, b.den);
    return make_rational(a.num * (l / a.den) + b.num * (l / b.den), l);
}

SchemeWeights scheme_weights(int K_y, int K_z) {
    if (K_y < 1 || K_y > kMaxSteps || K_z < 1 || K_z > kMaxSteps) {
        raise(ErrorKind::InvalidArgument,
              "K_y and K_z must be in [1, 6], got " + std::to_string(K_y) + ", " + std::to_string(K_z));
    }
    SchemeWeights w;
    w.K_y = K_y;
    w.K_z = K_z;
    for (const auto& e : kGammaY[static_cast<std::size_t>(K_y - 1)]) {
        w.gamma_y_exact.push_back(make_rational(e.num, e.den));
        w.gamma_y.push_back(w.gamma_y_exact.back().value());
    }
    for (const auto& e : kGammaZ[static_cast<std::size_t>(K_z - 1)]) {
        w.gamma_z_exact.push_back(make_rational(e.num, e.den));
        w.gamma_z.push_back(w.gamma_z_exact.back().value());
    }
    return w;
}

StencilSet make_stencils(const TensorRule& rule, double dt, int K, const ForwardMap& forward) {
    if (K < 1) raise(ErrorKind::InvalidArgument, "stencil set needs K >= 1");
    StencilSet s;
    s.rule = rule;
    s.dt = dt;
    s.K = K;
    const int d = rule.d;
    for (int k = 1; k <= K; ++k) {
        s.offsets.push_back(stencil_offsets(rule, k, dt, forward));
        const StencilOffsets& off = s.offsets.back();
        std::array<std::vector<double>, kMaxDim> wdw;
        for (int c = 0; c < d; ++c) {
            wdw[c].resize(rule.size());
            for (std::size_t l = 0; l < rule.size(); ++l) {
                wdw[c][l] = rule.normalized[l] * off.dW[l * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
            }
        }
        s.wdW.push_back(std::move(wdw));
    }
    return s;
}

Workspace::Workspace(std::size_t stencil_points, int d)
    : X(stencil_points * static_cast<std::size_t>(d)), y(stencil_points), f(stencil_points) {
    for (int c = 0; c < d; ++c) z[c].resize(stencil_points);
}

CondExpBundle conditional_expectations(const StencilSet& stencils, const LayerHistory& y_hist,
                                       const LayerHistory& z_hist, const SchemeWeights& weights,
                                       const ProblemSpec& problem, const double* x, double t_n, Workspace& ws) {
    const int d = problem.d;
    const int K = std::max(weights.K_y, weights.K_z);
    if (stencils.K < K || static_cast<int>(y_hist.size()) < K || static_cast<int>(z_hist.size()) < K) {
        raise(ErrorKind::InvalidArgument, "histories and stencils must cover K layers");
    }
    const std::size_t n = stencils.rule.size();
    const double* w = stencils.rule.normalized.data();
    CondExpBundle b;
    b.d = d;
    b.K_y = weights.K_y;
    b.K_z = weights.K_z;

    for (int j = 1; j <= K; ++j) {
        const StencilOffsets& off = stencils.offsets[static_cast<std::size_t>(j - 1)];
        const CoefficientSet& ys = y_hist[static_cast<std::size_t>(j - 1)];
        const CoefficientSet& zs = z_hist[static_cast<std::size_t>(j - 1)];
        eval_on_stencil(ys[0], x, off, ws.y.data());
        for (int c = 0; c < d; ++c) eval_on_stencil(zs[static_cast<std::size_t>(c)], x, off, ws.z[c].data());

        const double t = t_n + j * stencils.dt;
        for (std::size_t l = 0; l < n; ++l) {
            double* X = &ws.X[l * static_cast<std::size_t>(d)];
            double zl[kMaxDim] = {0.0, 0.0};
            for (int c = 0; c < d; ++c) {
                X[c] = x[c] + off.state[l * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
                zl[c] = ws.z[c][l];
            }
            ws.f[l] = problem.driver(t, X, ws.y[l], zl);
        }

        const auto jj = static_cast<std::size_t>(j - 1);
        const double Ef = kernels::weighted_sum(w, ws.f.data(), n);
        if (!std::isfinite(Ef)) {
            for (std::size_t l = 0; l < n; ++l) {
                if (std::isfinite(ws.f[l])) continue;
                std::ostringstream os;
                os << "driver is not finite at t = " << t << ", x = (";
                for (int c = 0; c < d; ++c) os << (c ? ", " : "") << ws.X[l * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
                os << "), y = " << ws.y[l] << ", z = (";
                for (int c = 0; c < d; ++c) os << (c ? ", " : "") << ws.z[c][l];
                os << ")";
                raise(ErrorKind::NumericalDomain, os.str());
            }
        }
        if (j <= weights.K_y) b.Ef[jj] = Ef;
        if (j == weights.K_y) b.Ey_far = kernels::weighted_sum(w, ws.y.data(), n);
        if (j <= weights.K_z) {
            for (int c = 0; c < d; ++c) {
                b.Ez[jj * kMaxDim + static_cast<std::size_t>(c)] = kernels::weighted_sum(w, ws.z[c].data(), n);
                b.EfdW[jj * kMaxDim + static_cast<std::size_t>(c)] =
                    kernels::weighted_sum(stencils.wdW[jj][c].data(), ws.f.data(), n);
            }
        }
    }
    return b;
}

std::array<double, kMaxDim> step_z(const CondExpBundle& bundle, const SchemeWeights& weights) {
    std::array<double, kMaxDim> z{};
    const double g0 = weights.gamma_z[0];
    for (int c = 0; c < bundle.d; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        double acc = bundle.Ez[cc];
        for (int j = 1; j <= weights.K_z; ++j) {
            const std::size_t at = static_cast<std::size_t>(j - 1) * kMaxDim + cc;
            acc += weights.gamma_z[static_cast<std::size_t>(j)] * (bundle.EfdW[at] - bundle.Ez[at]);
        }
        z[cc] = acc / g0;
    }
    return z;
}

PicardOutcome step_y_picard(const CondExpBundle& bundle, const SchemeWeights& weights, const double* z,
                            const ProblemSpec& problem, double t_n, const double* x, double dt, int p_max,
                            double tol) {
    const double h = weights.K_y * dt;
    double explicit_part = bundle.Ey_far;
    for (int j = 1; j <= weights.K_y; ++j) {
        explicit_part += h * weights.gamma_y[static_cast<std::size_t>(j)] * bundle.Ef[static_cast<std::size_t>(j - 1)];
    }
    const double implicit_weight = h * weights.gamma_y[0];
    PicardOutcome out;
    out.y = bundle.Ey_far;
    for (int p = 1; p <= p_max; ++p) {
        const double next = explicit_part + implicit_weight * problem.driver(t_n, x, out.y, z);
        out.last_change = std::abs(next - out.y);
        out.y = next;
        out.iterations = p;
        if (!(out.last_change > tol)) break;
    }
    return out;
}

void validate(const SolverConfig& c) {
    auto fail = [](const std::string& m) { raise(ErrorKind::InvalidArgument, m); };
    if (c.K_y < 1 || c.K_y > kMaxSteps || c.K_z < 1 || c.K_z > kMaxSteps) fail("K_y and K_z must be in [1, 6]");
    if (c.N < 1) fail("N must be positive");
    if (c.N < std::max(c.K_y, c.K_z)) fail("N must be at least max(K_y, K_z)");
    if (c.L < 1 || c.L > 64) fail("Gauss-Hermite point count must be in [1, 64]");
    if (c.picard_max < 1) fail("picard_max must be positive");
    if (!(c.picard_tol >= 0.0)) fail("picard_tol must be non-negative");
    if (c.threads < 0) fail("threads must be non-negative");
    if (c.r < 1) fail("interpolation order r must be positive");
    if (c.domain && !((*c.domain)[0] < (*c.domain)[1])) fail("domain needs lo < hi");
    if (c.smoothing_order != 4 && c.smoothing_order != 6) fail("smoothing order must be 4 or 6");
    if (c.smoothing_scale && !(*c.smoothing_scale > 0.0)) fail("smoothing scale must be positive");
    if (c.max_bootstrap_steps < 1) fail("bootstrap step cap must be positive");
    if (c.bootstrap_substeps < 1) fail("bootstrap substeps must be positive");
    if (c.bootstrap_refine < 0) fail("bootstrap refinement must be non-negative");
}

SpaceGrid make_space_grid(const ProblemSpec& problem, const SolverConfig& config, double dt) {
    Box box = problem.domain();
    if (config.domain) {
        for (int k = 0; k < problem.d; ++k) {
            box.lo[k] = problem.center[k] + (*config.domain)[0];
            box.hi[k] = problem.center[k] + (*config.domain)[1];
        }
    }
    return balance_space_grid(dt, config.K_y, config.K_z, config.r, box, config.limits);
}

double smoothing_width(const SolverConfig& config, double dt, double dx) {
    if (config.smoothing_scale) return *config.smoothing_scale * dx;
    return std::max(4.0 * dx, 1.25 * std::numbers::pi * std::sqrt(dt / config.L));
}

LayerValues terminal_layer(const ProblemSpec& problem, const SpaceGrid& grid, const SolverConfig& config,
                           double width) {
    const int d = problem.d;
    const auto P = static_cast<std::size_t>(grid.size());
    LayerValues layer;
    layer.d = d;
    layer.y.resize(P);
    std::array<std::vector<double>, kMaxDim> grad;
    for (int c = 0; c < d; ++c) grad[c].resize(P);
    for (std::size_t i = 0; i < P; ++i) {
        const Point x = grid.point(static_cast<std::int64_t>(i));
        layer.y[i] = problem.terminal(x.data());
        double gr[kMaxDim] = {0.0, 0.0};
        problem.terminal_gradient(x.data(), gr);
        for (int c = 0; c < d; ++c) grad[c][i] = gr[c];
    }
    const bool smooth = config.smoothing.value_or(problem.smoothing);
    if (smooth && problem.kink) {
        const SmoothingKernel kernel(config.smoothing_order);
        layer.y = smooth_terminal(layer.y, grid, *problem.kink, problem.terminal, kernel, width / grid.dx());
        for (int c = 0; c < d; ++c) {
            auto component = [&problem, c](const double* x) {
                double gr[kMaxDim] = {0.0, 0.0};
                problem.terminal_gradient(x, gr);
                return gr[c];
            };
            grad[c] = smooth_terminal(grad[c], grid, *problem.kink, component, kernel, width / grid.dx());
        }
    }
    layer.z.resize(P * static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < P; ++i) {
        double gr[kMaxDim] = {grad[0][i], d > 1 ? grad[1][i] : 0.0};
        const auto z = problem.terminal_z(gr);
        for (int c = 0; c < d; ++c) layer.z[static_cast<std::size_t>(c) * P + i] = z[c];
    }
    return layer;
}

std::vector<LayerValues> bootstrap_initial_layers(const ProblemSpec& problem, const TimeGrid& time,
                                                  const SpaceGrid& grid, const SolverConfig& config,
                                                  PicardStats* stats) {
    const int K = std::max(config.K_y, config.K_z);
    std::vector<LayerValues> layers;
    if (K == 1) return layers;
    const double dt = time.dt;
    const std::int64_t sub = config.bootstrap_substeps;
    const double mid = dt / static_cast<double>(sub);
    const double target = std::min(dt * dt, std::pow(dt, 0.5 * (config.K_y + 1)));
    const auto S = static_cast<std::int64_t>(std::ceil(mid / target * (1.0 - 1e-12)));
    const std::int64_t starts = S * (K - 1);
    const std::int64_t total = starts + (K - 1) * (sub - 1);
    if (total > config.max_bootstrap_steps) {
        raise(ErrorKind::ResourceLimit, "bootstrap needs " + std::to_string(total) + " fine steps, cap is " +
                                            std::to_string(config.max_bootstrap_steps));
    }
    const std::int64_t rho = bootstrap_refinement(config, total);
    const double fine_points = std::pow(static_cast<double>(rho * (grid.M() - 1) + 1), problem.d);
    if (fine_points > static_cast<double>(config.limits.max_points)) {
        raise(ErrorKind::ResourceLimit, "bootstrap grid refined by " + std::to_string(rho) + " exceeds " +
                                            std::to_string(config.limits.max_points) + " points");
    }
    const SpaceGrid fine_grid(grid.box(), rho * (grid.M() - 1) + 1);
    const TensorRule rule = tensor_rule(hermite_rule(config.L), problem.d);
    const double T = time.time(time.N);

    SweepCounters counters;
    StageTimes times;
    PicardStats local;
    std::vector<std::string> warnings;
    // Layer at sub-interval index k; every sub-th one is a coarse layer.
    auto emit = [&](std::int64_t k, const LayerValues& layer) {
        if (k % sub == 0) {
            LayerValues out = restrict_layer(layer, fine_grid, grid, rho);
            out.n = time.N - static_cast<int>(k / sub);
            layers.push_back(std::move(out));
        }
    };
    // Each stage reads a terminal smoothed for its own step.
    auto terminal_sets = [&](double step) {
        return build_sets(terminal_layer(problem, fine_grid, config, smoothing_width(config, step, fine_grid.dx())),
                          fine_grid, counters);
    };

    // One-step start over the first K-1 sub-intervals.
    std::vector<LayerSets> starts_kept;
    {
        const SchemeWeights weights = scheme_weights(1, 1);
        const StencilSet stencils = make_stencils(rule, mid / static_cast<double>(S), 1, problem.forward);
        LayerStepper stepper(problem, fine_grid, stencils, weights, config);
        LayerHistory y_one(1);
        LayerHistory z_one(1);
        LayerSets sets = terminal_sets(stencils.dt);
        y_one.push(std::move(sets.y));
        z_one.push(std::move(sets.z));
        LayerValues current;
        for (std::int64_t s = 1; s <= starts; ++s) {
            stepper.advance(-1, T - static_cast<double>(s) * stencils.dt, y_one, z_one, current, times, local,
                            warnings);
            sets = build_sets(current, fine_grid, counters);
            if (s % S == 0) {
                emit(s / S, current);
                starts_kept.push_back(sets);
            }
            y_one.push(std::move(sets.y));
            z_one.push(std::move(sets.z));
        }
    }

    // Multistep stage on the sub-intervals up to layer N-K+1.
    const std::int64_t last = (K - 1) * sub;
    if (last >= K) {
        const SchemeWeights weights = scheme_weights(config.K_y, config.K_z);
        const StencilSet stencils = make_stencils(rule, mid, K, problem.forward);
        LayerStepper stepper(problem, fine_grid, stencils, weights, config);
        LayerHistory y_hist(static_cast<std::size_t>(K));
        LayerHistory z_hist(static_cast<std::size_t>(K));
        LayerSets sets = terminal_sets(mid);
        y_hist.push(std::move(sets.y));
        z_hist.push(std::move(sets.z));
        for (LayerSets& kept : starts_kept) {
            y_hist.push(std::move(kept.y));
            z_hist.push(std::move(kept.z));
        }
        LayerValues current;
        for (std::int64_t k = K; k <= last; ++k) {
            stepper.advance(-1, T - static_cast<double>(k) * mid, y_hist, z_hist, current, times, local, warnings);
            emit(k, current);
            if (k < last) {
                sets = build_sets(current, fine_grid, counters);
                y_hist.push(std::move(sets.y));
                z_hist.push(std::move(sets.z));
            }
        }
    }
    if (stats) {
        stats->points += local.points;
        stats->iterations += local.iterations;
        stats->max_iterations = std::max(stats->max_iterations, local.max_iterations);
        stats->unconverged += local.unconverged;
    }
    return layers;
}

SolveResult solve_backward(const ProblemSpec& problem, const SolverConfig& config) {
    validate(config);
    if (problem.m != 1) raise(ErrorKind::InvalidArgument, "the solver handles m = 1");
    if (problem.d < 1 || problem.d > kMaxDim) raise(ErrorKind::InvalidArgument, "problem dimension must be 1 or 2");
    const auto total_start = Clock::now();

    const TimeGrid time = build_time_grid(problem.t0, problem.T, config.N);
    const SpaceGrid grid = make_space_grid(problem, config, time.dt);
    const SchemeWeights weights = scheme_weights(config.K_y, config.K_z);
    const int K = std::max(config.K_y, config.K_z);
    const StencilSet stencils = make_stencils(tensor_rule(hermite_rule(config.L), problem.d), time.dt, K, problem.forward);

    SolveResult result;
    result.N = config.N;
    result.M = grid.M();
    result.dt = time.dt;
    result.dx = grid.dx();

    auto start = Clock::now();
    LayerValues terminal = terminal_layer(problem, grid, config, smoothing_width(config, time.dt, grid.dx()));
    terminal.n = config.N;
    std::vector<LayerValues> boot = bootstrap_initial_layers(problem, time, grid, config, &result.picard);
    result.times.bootstrap = seconds_since(start);

    LayerHistory y_hist(static_cast<std::size_t>(K));
    LayerHistory z_hist(static_cast<std::size_t>(K));
    start = Clock::now();
    auto push_layer = [&](const LayerValues& layer) {
        LayerSets sets = build_sets(layer, grid, result.counters);
        y_hist.push(std::move(sets.y));
        z_hist.push(std::move(sets.z));
    };
    push_layer(terminal);
    for (const LayerValues& layer : boot) push_layer(layer);
    result.times.interp += seconds_since(start);
    boot.clear();

    LayerStepper stepper(problem, grid, stencils, weights, config);
    LayerValues current;
    for (int n = config.N - K; n >= 0; --n) {
        stepper.advance(n, time.time(n), y_hist, z_hist, current, result.times, result.picard, result.warnings);
        ++result.counters.layers;
        if (n > 0) {
            start = Clock::now();
            push_layer(current);
            result.times.interp += seconds_since(start);
        }
    }
    if (config.N - K < 0) raise(ErrorKind::InvalidArgument, "N must be at least max(K_y, K_z)");

    const Point target = config.eval_point.value_or(problem.center);
    result.eval_index = grid.nearest_index(std::span<const double>(target.data(), static_cast<std::size_t>(problem.d)));
    result.eval_point = grid.point(result.eval_index);
    const auto e = static_cast<std::size_t>(result.eval_index);
    result.y0 = current.y[e];
    for (int c = 0; c < problem.d; ++c) result.z0[c] = current.z_at(c, e);
    result.layer0 = std::move(current);
    result.times.total = seconds_since(total_start);
    return result;
}

}  // namespace msbsde
