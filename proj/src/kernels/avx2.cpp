#include <immintrin.h>

#include <cstdint>

#include "msbsde/kernels.hpp"

namespace msbsde::kernels::avx2 {

namespace {

// Clamp to [lo, hi], then the left knot index min(trunc((x - lo)/h), last)
// and the local coordinate, matching the scalar evaluation path.
inline __m128i cell_index(__m256d x, __m256d lo, __m256d h, int last) {
    const __m256d q = _mm256_div_pd(_mm256_sub_pd(x, lo), h);
    return _mm_min_epi32(_mm256_cvttpd_epi32(q), _mm_set1_epi32(last));
}

inline __m256d to_pd(__m128i i) { return _mm256_cvtepi32_pd(i); }

}  // namespace

void cubic_shifted(const CubicSplineCoeffs& s, double base, const double* off, std::size_t n, double* out) {
    const __m256d vb = _mm256_set1_pd(base);
    const __m256d lo = _mm256_set1_pd(s.x0);
    const __m256d hi = _mm256_set1_pd(s.x_last);
    const __m256d h = _mm256_set1_pd(s.dx);
    const int last = static_cast<int>(s.M - 2);
    const double* c = s.coef.data();
    std::size_t l = 0;
    for (; l + 4 <= n; l += 4) {
        __m256d x = _mm256_add_pd(vb, _mm256_loadu_pd(off + l));
        x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);
        const __m128i j = cell_index(x, lo, h, last);
        const __m256d t = _mm256_sub_pd(x, _mm256_fmadd_pd(to_pd(j), h, lo));
        const __m128i j4 = _mm_slli_epi32(j, 2);
        const __m256d a = _mm256_i32gather_pd(c, j4, 8);
        const __m256d b = _mm256_i32gather_pd(c + 1, j4, 8);
        const __m256d cc = _mm256_i32gather_pd(c + 2, j4, 8);
        const __m256d d = _mm256_i32gather_pd(c + 3, j4, 8);
        __m256d r = _mm256_fmadd_pd(t, d, cc);
        r = _mm256_fmadd_pd(t, r, b);
        r = _mm256_fmadd_pd(t, r, a);
        _mm256_storeu_pd(out + l, r);
    }
    for (; l < n; ++l) out[l] = eval_cubic_spline(s, base + off[l]);
}

void bicubic_shifted(const BicubicCoeffs& s, double b0, double b1, const double* off, std::size_t n, double* out) {
    const __m256d vb0 = _mm256_set1_pd(b0);
    const __m256d vb1 = _mm256_set1_pd(b1);
    const __m256d lo0 = _mm256_set1_pd(s.x0);
    const __m256d lo1 = _mm256_set1_pd(s.y0);
    const __m256d hi0 = _mm256_set1_pd(s.x_last);
    const __m256d hi1 = _mm256_set1_pd(s.y_last);
    const __m256d h = _mm256_set1_pd(s.dx);
    const int last = static_cast<int>(s.M - 2);
    const __m128i cells = _mm_set1_epi32(static_cast<int>(s.M - 1));
    const double* a = s.coef.data();
    std::size_t l = 0;
    for (; l + 4 <= n; l += 4) {
        // Deinterleave four (x, y) offset pairs.
        const __m256d p01 = _mm256_loadu_pd(off + 2 * l);
        const __m256d p23 = _mm256_loadu_pd(off + 2 * l + 4);
        const __m256d lo_half = _mm256_permute2f128_pd(p01, p23, 0x20);
        const __m256d hi_half = _mm256_permute2f128_pd(p01, p23, 0x31);
        __m256d x = _mm256_add_pd(vb0, _mm256_unpacklo_pd(lo_half, hi_half));
        __m256d y = _mm256_add_pd(vb1, _mm256_unpackhi_pd(lo_half, hi_half));
        x = _mm256_min_pd(_mm256_max_pd(x, lo0), hi0);
        y = _mm256_min_pd(_mm256_max_pd(y, lo1), hi1);
        const __m128i cx = cell_index(x, lo0, h, last);
        const __m128i cy = cell_index(y, lo1, h, last);
        const __m256d u = _mm256_div_pd(_mm256_sub_pd(x, _mm256_fmadd_pd(to_pd(cx), h, lo0)), h);
        const __m256d v = _mm256_div_pd(_mm256_sub_pd(y, _mm256_fmadd_pd(to_pd(cy), h, lo1)), h);
        const __m128i cell16 = _mm_slli_epi32(_mm_add_epi32(cx, _mm_mullo_epi32(cy, cells)), 4);
        __m256d acc = _mm256_setzero_pd();
        for (int j = 3; j >= 0; --j) {
            const double* col = a + 4 * j;
            __m256d r = _mm256_i32gather_pd(col + 3, cell16, 8);
            r = _mm256_fmadd_pd(u, r, _mm256_i32gather_pd(col + 2, cell16, 8));
            r = _mm256_fmadd_pd(u, r, _mm256_i32gather_pd(col + 1, cell16, 8));
            r = _mm256_fmadd_pd(u, r, _mm256_i32gather_pd(col, cell16, 8));
            acc = _mm256_fmadd_pd(acc, v, r);
        }
        _mm256_storeu_pd(out + l, acc);
    }
    for (; l < n; ++l) out[l] = eval_bicubic(s, b0 + off[2 * l], b1 + off[2 * l + 1]);
}

double weighted_sum(const double* w, const double* v, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t l = 0;
    for (; l + 4 <= n; l += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + l), _mm256_loadu_pd(v + l), acc);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double tail = 0.0;
    for (; l < n; ++l) tail += w[l] * v[l];
    return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + tail;
}

}  // namespace msbsde::kernels::avx2
