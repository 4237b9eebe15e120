#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>
#include <vector>

#include "msbsde/error.hpp"
#include "msbsde/interpolant.hpp"
#include "msbsde/problems.hpp"
#include "msbsde/quadrature.hpp"
#include "msbsde/scheme.hpp"

using namespace msbsde;

namespace {

struct Frac {
    long long n = 0;
    long long d = 1;
};

Frac reduce(long long n, long long d) {
    if (d < 0) {
        n = -n;
        d = -d;
    }
    const long long g = std::gcd(n, d);
    return g == 0 ? Frac{0, 1} : Frac{n / g, d / g};
}

Frac add(Frac a, Frac b) { return reduce(a.n * b.d + b.n * a.d, a.d * b.d); }

// Integral over [0, 1] of the Lagrange basis polynomial of node j on the
// nodes 0..K, exact in rationals.
Frac lagrange_integral(int K, int j) {
    std::vector<long long> poly{1};
    long long denom = 1;
    for (int m = 0; m <= K; ++m) {
        if (m == j) continue;
        std::vector<long long> next(poly.size() + 1, 0);
        for (std::size_t k = 0; k < poly.size(); ++k) {
            next[k + 1] += poly[k];
            next[k] -= m * poly[k];
        }
        poly = next;
        denom *= (j - m);
    }
    Frac acc{0, 1};
    for (std::size_t k = 0; k < poly.size(); ++k) acc = add(acc, reduce(poly[k], static_cast<long long>(k + 1)));
    return reduce(acc.n, acc.d * denom);
}

SpaceGrid line(double lo, double hi, std::int64_t M) {
    Box b;
    b.d = 1;
    b.lo = {lo, 0.0};
    b.hi = {hi, 0.0};
    return SpaceGrid(b, M);
}

ProblemSpec constant_problem(int d, double c) {
    ProblemSpec p;
    p.name = "constant";
    p.d = d;
    p.T = 1.0;
    p.half_width = 1.0;
    p.forward = ForwardMap::brownian(d);
    // Vanishes only at y = c, z = 0, so the fixed point is not trivial.
    p.driver = [c, d](double, const double*, double y, const double* z) {
        double s = 0.5 * (c - y);
        for (int k = 0; k < d; ++k) s += 0.1 * z[k];
        return s;
    };
    p.terminal = [c](const double*) { return c; };
    p.terminal_gradient = [d](const double*, double* g) {
        for (int k = 0; k < d; ++k) g[k] = 0.0;
    };
    return p;
}

LayerHistory history_of(const std::vector<std::vector<double>>& fields, const SpaceGrid& g, std::size_t K) {
    LayerHistory h(K);
    for (auto it = fields.rbegin(); it != fields.rend(); ++it) h.push(CoefficientSet{build_interpolant(*it, g)});
    return h;
}

// Residual of the reference y equation for the exact solution of the
// first example at (t, x) with K steps of size dt.
double reference_residual(int K, double dt, double t, double x) {
    const ProblemSpec p = example1();
    const SchemeWeights w = scheme_weights(K, 1);
    const TensorRule rule = tensor_rule(hermite_rule(48), 1);
    auto expect = [&](int j, auto fn) {
        double acc = 0.0;
        for (std::size_t l = 0; l < rule.size(); ++l) {
            const double X = x + std::sqrt(2.0 * j * dt) * rule.points[l];
            acc += rule.normalized[l] * fn(X);
        }
        return acc;
    };
    auto f_at = [&](double s, double X) {
        const AnalyticValue v = (*p.analytic)(s, &X);
        return p.driver(s, &X, v.y, v.z.data());
    };
    double rhs = expect(K, [&](double X) { return (*p.analytic)(t + K * dt, &X).y; });
    rhs += K * dt * w.gamma_y[0] * f_at(t, x);
    for (int j = 1; j <= K; ++j) {
        rhs += K * dt * w.gamma_y[static_cast<std::size_t>(j)] * expect(j, [&](double X) { return f_at(t + j * dt, X); });
    }
    return (*p.analytic)(t, &x).y - rhs;
}

}  // namespace

TEST_SUITE("scheme") {
    TEST_CASE("weight tables") {
        const SchemeWeights a = scheme_weights(3, 2);
        CHECK(a.gamma_y_exact == std::vector<Rational>{{1, 8}, {3, 8}, {3, 8}, {1, 8}});
        CHECK(a.gamma_z_exact == std::vector<Rational>{{5, 12}, {2, 3}, {-1, 12}});
        const SchemeWeights b = scheme_weights(1, 6);
        CHECK(b.gamma_y_exact == std::vector<Rational>{{1, 2}, {1, 2}});
        CHECK(b.gamma_z_exact[0] == Rational{163, 448});
        CHECK(b.gamma_z_exact[6] == Rational{-1, 1344});
        CHECK(scheme_weights(5, 1).gamma_y_exact[2] == Rational{107, 600});
        CHECK_THROWS_AS(scheme_weights(0, 1), Error);
        CHECK_THROWS_AS(scheme_weights(1, 7), Error);
    }

    TEST_CASE("rows sum to one exactly and y rows are symmetric") {
        for (int K = 1; K <= kMaxSteps; ++K) {
            const SchemeWeights w = scheme_weights(K, K);
            Rational sy{0, 1};
            Rational sz{0, 1};
            for (const auto& r : w.gamma_y_exact) sy = sy + r;
            for (const auto& r : w.gamma_z_exact) sz = sz + r;
            CHECK(sy == Rational{1, 1});
            CHECK(sz == Rational{1, 1});
            for (int j = 0; j <= K; ++j) {
                CHECK(w.gamma_y_exact[static_cast<std::size_t>(j)] == w.gamma_y_exact[static_cast<std::size_t>(K - j)]);
                CHECK(w.gamma_y[static_cast<std::size_t>(j)] == w.gamma_y_exact[static_cast<std::size_t>(j)].value());
            }
        }
    }

    TEST_CASE("z weights integrate over the first step") {
        // Up to three steps the rows integrate the interpolant on all nodes.
        for (int K = 1; K <= 3; ++K) {
            const SchemeWeights w = scheme_weights(1, K);
            for (int j = 0; j <= K; ++j) {
                const Frac f = lagrange_integral(K, j);
                CAPTURE(K);
                CAPTURE(j);
                CHECK(w.gamma_z_exact[static_cast<std::size_t>(j)] == Rational{f.n, f.d});
            }
        }
        // Longer rows stay exact for cubics only.
        for (int K = 4; K <= kMaxSteps; ++K) {
            const SchemeWeights w = scheme_weights(1, K);
            for (int k = 0; k <= 4; ++k) {
                Frac acc{0, 1};
                for (int j = 0; j <= K; ++j) {
                    long long jk = 1;
                    for (int e = 0; e < k; ++e) jk *= j;
                    const Rational& g = w.gamma_z_exact[static_cast<std::size_t>(j)];
                    acc = add(acc, reduce(g.num * jk, g.den));
                }
                const Frac exact{1, k + 1};
                CAPTURE(K);
                CAPTURE(k);
                if (k <= 3) {
                    CHECK((acc.n == exact.n && acc.d == exact.d));
                } else {
                    CHECK_FALSE((acc.n == exact.n && acc.d == exact.d));
                }
            }
        }
        // The first three y rows are closed Newton-Cotes weights.
        for (int K = 1; K <= 3; ++K) {
            const SchemeWeights w = scheme_weights(K, 1);
            for (int j = 0; j <= K; ++j) {
                Frac acc{0, 1};
                for (int s = 0; s < K; ++s) {
                    // Integral of l_j over [s, s+1] via shifting is not
                    // needed: integrate on [0, K] by summing unit pieces.
                    std::vector<long long> poly{1};
                    long long denom = 1;
                    for (int m = 0; m <= K; ++m) {
                        if (m == j) continue;
                        std::vector<long long> next(poly.size() + 1, 0);
                        for (std::size_t k = 0; k < poly.size(); ++k) {
                            next[k + 1] += poly[k];
                            next[k] -= m * poly[k];
                        }
                        poly = next;
                        denom *= (j - m);
                    }
                    for (std::size_t k = 0; k < poly.size(); ++k) {
                        long long hi = 1;
                        long long lo = 1;
                        for (std::size_t e = 0; e <= k; ++e) {
                            hi *= s + 1;
                            lo *= s;
                        }
                        acc = add(acc, reduce(poly[k] * (hi - lo), static_cast<long long>(k + 1) * denom * K));
                    }
                }
                CHECK(w.gamma_y_exact[static_cast<std::size_t>(j)] == Rational{acc.n, acc.d});
            }
        }
    }

    TEST_CASE("explicit z step") {
        const SchemeWeights w = scheme_weights(1, 1);
        CondExpBundle b;
        b.K_z = 1;
        b.Ez[0] = 1.0;
        b.EfdW[0] = 0.5;
        CHECK(step_z(b, w)[0] == doctest::Approx(1.5).epsilon(1e-15));
        CondExpBundle zero;
        zero.K_z = 1;
        CHECK(step_z(zero, w)[0] == 0.0);
        for (int K = 1; K <= kMaxSteps; ++K) {
            const SchemeWeights wk = scheme_weights(1, K);
            CondExpBundle c;
            c.d = 2;
            c.K_z = K;
            for (int j = 0; j < K; ++j) {
                c.Ez[static_cast<std::size_t>(j) * kMaxDim] = 0.7;
                c.Ez[static_cast<std::size_t>(j) * kMaxDim + 1] = -2.0;
            }
            const auto z = step_z(c, wk);
            CHECK(z[0] == doctest::Approx(0.7).epsilon(1e-13));
            CHECK(z[1] == doctest::Approx(-2.0).epsilon(1e-13));
        }
    }

    TEST_CASE("Picard iteration for the implicit y step") {
        ProblemSpec p = constant_problem(1, 0.0);
        p.driver = [](double, const double*, double y, const double*) { return -y; };
        const SchemeWeights w = scheme_weights(1, 1);
        CondExpBundle b;
        b.K_y = 1;
        b.Ey_far = 2.0;
        const double x = 0.0;
        const double z = 0.0;
        const double dt = 0.1;
        const PicardOutcome out = step_y_picard(b, w, &z, p, 0.0, &x, dt, 60, 1e-15);
        CHECK(out.y == doctest::Approx(2.0 / (1.0 + dt / 2)).epsilon(1e-14));
        CHECK(out.iterations > 1);

        p.driver = [](double, const double*, double, const double*) { return 0.0; };
        const PicardOutcome flat = step_y_picard(b, w, &z, p, 0.0, &x, dt, 30, 1e-14);
        CHECK(flat.y == 2.0);
        CHECK(flat.iterations == 1);

        p.driver = [](double, const double*, double y, const double*) { return -y; };
        const PicardOutcome capped = step_y_picard(b, w, &z, p, 0.0, &x, dt, 2, 0.0);
        CHECK(capped.iterations == 2);
        CHECK(capped.last_change > 0.0);
    }

    TEST_CASE("conditional expectations of simple fields") {
        const SpaceGrid g = line(-3.0, 3.0, 121);
        const ProblemSpec p = constant_problem(1, 0.0);
        ProblemSpec zero = p;
        zero.driver = [](double, const double*, double, const double*) { return 0.0; };
        const SchemeWeights w = scheme_weights(2, 2);
        const StencilSet st = make_stencils(tensor_rule(hermite_rule(8), 1), 0.01, 2, zero.forward);
        Workspace ws(st.rule.size(), 1);
        const double x = g.coord(0, 50);

        const std::vector<double> c(121, 1.25);
        const LayerHistory yc = history_of({c, c}, g, 2);
        const LayerHistory zc = history_of({c, c}, g, 2);
        const CondExpBundle b = conditional_expectations(st, yc, zc, w, zero, &x, 0.0, ws);
        CHECK(b.Ey_far == doctest::Approx(1.25).epsilon(1e-14));
        CHECK(std::abs(b.Ef[0]) == 0.0);
        CHECK(std::abs(b.EfdW[0]) == 0.0);
        CHECK(b.Ez[0] == doctest::Approx(1.25).epsilon(1e-14));
        CHECK(b.Ez[kMaxDim] == doctest::Approx(1.25).epsilon(1e-14));

        std::vector<double> lin(121);
        for (std::int64_t i = 0; i < 121; ++i) lin[static_cast<std::size_t>(i)] = g.coord(0, i);
        const LayerHistory yl = history_of({lin, lin}, g, 2);
        const CondExpBundle bl = conditional_expectations(st, yl, zc, w, zero, &x, 0.0, ws);
        CHECK(bl.Ey_far == doctest::Approx(x).epsilon(1e-13));

        // f = y on a linear field: E[f dW] = E[(x + dW) dW] = k dt.
        ProblemSpec fy = zero;
        fy.driver = [](double, const double*, double y, const double*) { return y; };
        const CondExpBundle bf = conditional_expectations(st, yl, zc, w, fy, &x, 0.0, ws);
        CHECK(bf.EfdW[0] == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(bf.EfdW[kMaxDim] == doctest::Approx(0.02).epsilon(1e-12));
        CHECK(bf.Ef[1] == doctest::Approx(x).epsilon(1e-13));

        LayerHistory short_hist(2);
        short_hist.push(CoefficientSet{build_interpolant(c, g)});
        CHECK_THROWS_AS(conditional_expectations(st, short_hist, zc, w, zero, &x, 0.0, ws), Error);
    }

    TEST_CASE("non-finite driver values name the point") {
        const SpaceGrid g = line(-3.0, 3.0, 61);
        ProblemSpec p = constant_problem(1, 0.0);
        p.driver = [](double, const double*, double y, const double*) { return std::log(y); };
        const SchemeWeights w = scheme_weights(1, 1);
        const StencilSet st = make_stencils(tensor_rule(hermite_rule(4), 1), 0.01, 1, p.forward);
        Workspace ws(st.rule.size(), 1);
        const std::vector<double> neg(61, -1.0);
        const LayerHistory h = history_of({neg}, g, 1);
        const double x = 0.0;
        try {
            conditional_expectations(st, h, h, w, p, &x, 0.5, ws);
            FAIL("expected a numerical-domain error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::NumericalDomain);
            CHECK(std::string(e.what()).find("t = 0.51") != std::string::npos);
            CHECK(std::string(e.what()).find("y = -1") != std::string::npos);
        }
    }

    TEST_CASE("reference y equation has a fifth-order local residual") {
        for (int K = 3; K <= kMaxSteps; ++K) {
            const double r1 = std::abs(reference_residual(K, 0.04, 0.1, 0.3));
            const double r2 = std::abs(reference_residual(K, 0.02, 0.1, 0.3));
            const double r3 = std::abs(reference_residual(K, 0.01, 0.1, 0.3));
            CAPTURE(K);
            CAPTURE(r1);
            CAPTURE(r3);
            CHECK(std::log2(r1 / r3) / 2.0 >= 4.5);
            CHECK(r2 < r1);
        }
    }

    TEST_CASE("constant solution is a fixed point for every (K_y, K_z)") {
        for (const int d : {1, 2}) {
            const ProblemSpec p = constant_problem(d, 1.7);
            double worst = 0.0;
            for (int ky = 1; ky <= kMaxSteps; ++ky) {
                for (int kz = 1; kz <= kMaxSteps; ++kz) {
                    if (d == 2 && (ky + kz) % 5 != 0) continue;
                    SolverConfig c;
                    c.K_y = ky;
                    c.K_z = kz;
                    c.N = 8;
                    c.L = d == 1 ? 6 : 3;
                    c.threads = 1;
                    c.bootstrap_substeps = 2;
                    const SolveResult res = solve_backward(p, c);
                    for (double y : res.layer0.y) worst = std::max(worst, std::abs(y - 1.7));
                    for (double z : res.layer0.z) worst = std::max(worst, std::abs(z));
                }
            }
            CAPTURE(d);
            CHECK(worst <= 1e-10);
        }
    }

    TEST_CASE("bootstrap layers") {
        const ProblemSpec p = example1();
        SolverConfig c;
        c.K_y = c.K_z = 1;
        c.N = 64;
        const TimeGrid t1 = build_time_grid(0.0, 1.0, 64);
        CHECK(bootstrap_initial_layers(p, t1, make_space_grid(p, c, t1.dt), c).empty());

        c.K_y = c.K_z = 3;
        c.domain = std::array<double, 2>{-4.0, 4.0};
        auto max_error = [&](int N) {
            c.N = N;
            const TimeGrid t = build_time_grid(0.0, 1.0, N);
            const SpaceGrid g = make_space_grid(p, c, t.dt);
            const auto layers = bootstrap_initial_layers(p, t, g, c);
            REQUIRE(layers.size() == 2);
            CHECK(layers[0].n == N - 1);
            CHECK(layers[1].n == N - 2);
            double e = 0.0;
            for (const auto& L : layers) {
                for (std::int64_t i = 0; i < g.size(); ++i) {
                    const Point x = g.point(i);
                    if (std::abs(x[0]) > 2.0) continue;
                    const AnalyticValue a = (*p.analytic)(t.time(L.n), x.data());
                    e = std::max(e, std::abs(L.y[static_cast<std::size_t>(i)] - a.y));
                }
            }
            return e;
        };
        const double dt = 1.0 / 32;
        const double e32 = max_error(32);
        CAPTURE(e32);
        CHECK(e32 <= std::pow(dt, 4));
    }

    TEST_CASE("results do not depend on the worker count") {
        for (const char* name : {"ex2", "ex4_2d"}) {
            const ProblemSpec p = make_problem(name);
            SolverConfig c;
            c.K_y = c.K_z = 2;
            c.N = p.d == 1 ? 16 : 4;
            c.L = p.d == 1 ? 16 : 4;
            if (p.d == 2) c.domain = std::array<double, 2>{-2.0, 2.0};
            std::vector<SolveResult> runs;
            for (const int threads : {1, 2, 8}) {
                c.threads = threads;
                runs.push_back(solve_backward(p, c));
            }
            for (std::size_t r = 1; r < runs.size(); ++r) {
                CAPTURE(name);
                REQUIRE(runs[r].layer0.y.size() == runs[0].layer0.y.size());
                CHECK(std::memcmp(runs[r].layer0.y.data(), runs[0].layer0.y.data(),
                                  runs[0].layer0.y.size() * sizeof(double)) == 0);
                CHECK(std::memcmp(runs[r].layer0.z.data(), runs[0].layer0.z.data(),
                                  runs[0].layer0.z.size() * sizeof(double)) == 0);
                CHECK(runs[r].picard.iterations == runs[0].picard.iterations);
            }
        }
    }

    TEST_CASE("sweep bookkeeping") {
        const ProblemSpec p = example1();
        SolverConfig c;
        c.K_y = c.K_z = 2;
        c.N = 16;
        c.L = 8;
        const SolveResult r = solve_backward(p, c);
        CHECK(r.counters.layers == 15);
        // Terminal, one bootstrap layer and every computed layer but t0.
        CHECK(r.counters.y_builds == 16);
        CHECK(r.counters.z_builds == 16);
        CHECK(r.times.total > 0.0);
        CHECK(r.times.expect > 0.0);
        CHECK(r.times.update > 0.0);
        CHECK(r.times.bootstrap > 0.0);
        CHECK(r.eval_point[0] == 0.0);
        CHECK(r.M == make_space_grid(p, c, 1.0 / 16).M());
        CHECK(r.picard.average() >= 1.0);
    }

    TEST_CASE("configuration errors") {
        const ProblemSpec p = example1();
        SolverConfig c;
        c.N = 2;
        CHECK_THROWS_AS(solve_backward(p, c), Error);
        c = SolverConfig{};
        c.L = 0;
        CHECK_THROWS_AS(validate(c), Error);
        c = SolverConfig{};
        c.smoothing_order = 5;
        CHECK_THROWS_AS(validate(c), Error);
        c = SolverConfig{};
        c.domain = std::array<double, 2>{1.0, -1.0};
        CHECK_THROWS_AS(validate(c), Error);
        c = SolverConfig{};
        c.N = 4096;
        c.max_bootstrap_steps = 10;
        try {
            solve_backward(p, c);
            FAIL("expected a resource-limit error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::ResourceLimit);
        }
    }
}
