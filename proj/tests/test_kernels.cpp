#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "msbsde/error.hpp"
#include "msbsde/history.hpp"
#include "msbsde/kernels.hpp"
#include "msbsde/spline.hpp"

using namespace msbsde;

namespace {

struct Fixture {
    SpaceGrid g1;
    SpaceGrid g2;
    CubicSplineCoeffs cubic;
    BicubicCoeffs bicubic;
    std::vector<double> off1;
    std::vector<double> off2;

    Fixture()
        : g1(Box{1, {-4.0, 0.0}, {4.0, 0.0}}, 257), g2(Box{2, {-2.0, -2.0}, {2.0, 2.0}}, 65) {
        std::vector<double> v1(static_cast<std::size_t>(g1.size()));
        for (std::int64_t i = 0; i < g1.size(); ++i) v1[static_cast<std::size_t>(i)] = std::tanh(g1.point(i)[0]);
        cubic = build_cubic_spline(v1, g1);
        std::vector<double> v2(static_cast<std::size_t>(g2.size()));
        for (std::int64_t i = 0; i < g2.size(); ++i) {
            const Point p = g2.point(i);
            v2[static_cast<std::size_t>(i)] = std::sin(p[0]) * std::exp(-p[1] * p[1]);
        }
        bicubic = build_bicubic(v2, g2);
        // Offsets reach past the box so clamping is exercised.
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        off1.resize(37);
        for (double& o : off1) o = 2.0 * u(rng);
        off2.resize(2 * 67);
        for (double& o : off2) o = u(rng);
    }
};

bool close(double a, double b) { return std::abs(a - b) <= 1e-13 * std::max(1.0, std::abs(a)); }

}  // namespace

TEST_SUITE("kernels") {
    TEST_CASE("variant names") {
        CHECK(kernels::parse_isa("scalar") == kernels::Isa::Scalar);
        CHECK(kernels::parse_isa("avx2") == kernels::Isa::Avx2);
        CHECK(std::string(kernels::to_string(kernels::Isa::Avx2)) == "avx2");
        CHECK_THROWS_AS(kernels::parse_isa("sse9"), Error);
        CHECK(kernels::supported(kernels::Isa::Scalar));
        CHECK(kernels::supported(kernels::detect()));
    }

    TEST_CASE("scalar kernels match direct evaluation") {
        const Fixture f;
        std::vector<double> out(f.off1.size());
        kernels::scalar::cubic_shifted(f.cubic, 0.3, f.off1.data(), f.off1.size(), out.data());
        for (std::size_t l = 0; l < out.size(); ++l) CHECK(out[l] == eval_cubic_spline(f.cubic, 0.3 + f.off1[l]));
        std::vector<double> out2(f.off2.size() / 2);
        kernels::scalar::bicubic_shifted(f.bicubic, -0.4, 0.9, f.off2.data(), out2.size(), out2.data());
        for (std::size_t l = 0; l < out2.size(); ++l) {
            CHECK(out2[l] == eval_bicubic(f.bicubic, -0.4 + f.off2[2 * l], 0.9 + f.off2[2 * l + 1]));
        }
        const double w[5] = {0.1, 0.2, 0.3, 0.25, 0.15};
        const double v[5] = {1.0, -2.0, 3.0, 4.0, -5.0};
        CHECK(kernels::scalar::weighted_sum(w, v, 5) == doctest::Approx(0.1 - 0.4 + 0.9 + 1.0 - 0.75));
    }

    TEST_CASE("AVX2 kernels agree with the scalar reference") {
        if (!kernels::supported(kernels::Isa::Avx2)) {
            MESSAGE("AVX2 variant not available on this machine");
            return;
        }
        const Fixture f;
        // Every tail length up to two full vectors.
        for (std::size_t n = 0; n <= f.off1.size(); ++n) {
            std::vector<double> a(n);
            std::vector<double> b(n);
            kernels::scalar::cubic_shifted(f.cubic, 0.77, f.off1.data(), n, a.data());
            kernels::avx2::cubic_shifted(f.cubic, 0.77, f.off1.data(), n, b.data());
            for (std::size_t l = 0; l < n; ++l) CHECK(close(a[l], b[l]));
        }
        for (std::size_t n = 0; n <= f.off2.size() / 2; n += 3) {
            std::vector<double> a(n);
            std::vector<double> b(n);
            kernels::scalar::bicubic_shifted(f.bicubic, 0.1, -1.3, f.off2.data(), n, a.data());
            kernels::avx2::bicubic_shifted(f.bicubic, 0.1, -1.3, f.off2.data(), n, b.data());
            for (std::size_t l = 0; l < n; ++l) CHECK(close(a[l], b[l]));
        }
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 31u, 64u, 1024u}) {
            std::vector<double> w(n);
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) {
                w[i] = u(rng);
                v[i] = u(rng);
            }
            const double a = kernels::scalar::weighted_sum(w.data(), v.data(), n);
            const double b = kernels::avx2::weighted_sum(w.data(), v.data(), n);
            CHECK(std::abs(a - b) <= 1e-13 * std::max(1.0, static_cast<double>(n)));
        }
    }

    TEST_CASE("dispatch follows the active variant") {
        const kernels::Isa saved = kernels::active();
        const Fixture f;
        std::vector<double> a(f.off1.size());
        std::vector<double> b(f.off1.size());
        kernels::set_active(kernels::Isa::Scalar);
        CHECK(kernels::active() == kernels::Isa::Scalar);
        kernels::cubic_shifted(f.cubic, 0.2, f.off1.data(), a.size(), a.data());
        kernels::scalar::cubic_shifted(f.cubic, 0.2, f.off1.data(), b.size(), b.data());
        CHECK(a == b);
        if (!kernels::supported(kernels::Isa::Avx2)) CHECK_THROWS_AS(kernels::set_active(kernels::Isa::Avx2), Error);
        kernels::set_active(saved);
    }
}

TEST_SUITE("history") {
    TEST_CASE("push shifts the ring") {
        SplineHistory<std::string> h(3);
        h.push("C");
        h.push("B");
        h.push("A");
        CHECK(h.full());
        CHECK(h[0] == "A");
        CHECK(h[1] == "B");
        CHECK(h[2] == "C");
        h.push("D");
        CHECK(h[0] == "D");
        CHECK(h[1] == "A");
        CHECK(h[2] == "B");
        CHECK(h.size() == 3);
        CHECK_THROWS_AS(h[3], Error);
        const auto shifted = shift_history(h, std::string("E"));
        CHECK(shifted[0] == "E");
        CHECK(shifted[2] == "A");
        CHECK(h[0] == "D");
    }

    TEST_CASE("capacity one replaces") {
        SplineHistory<int> h(1);
        h.push(1);
        h.push(2);
        CHECK(h.size() == 1);
        CHECK(h[0] == 2);
        CHECK_THROWS_AS(SplineHistory<int>(0), Error);
    }

    TEST_CASE("holds the most recent pushes") {
        for (std::size_t K = 1; K <= 6; ++K) {
            SplineHistory<int> h(K);
            for (int n = 0; n < 50; ++n) h.push(n);
            for (std::size_t j = 0; j < K; ++j) CHECK(h[j] == 49 - static_cast<int>(j));
        }
        SplineHistory<int> partial(4);
        partial.push(7);
        CHECK(partial.size() == 1);
        CHECK_FALSE(partial.full());
        CHECK_THROWS_AS(partial[1], Error);
    }
}
