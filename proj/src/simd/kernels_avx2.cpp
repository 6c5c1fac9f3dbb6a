// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include "sevln/simd/kernels.hpp"

#if SEVLN_SIMD_X86

#include <immintrin.h>

namespace sevln::simd {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

DotNorms dot_norms_avx2(const float* a, const float* b, std::size_t n) {
    __m256d dot0 = _mm256_setzero_pd(), dot1 = _mm256_setzero_pd();
    __m256d na0 = _mm256_setzero_pd(), na1 = _mm256_setzero_pd();
    __m256d nb0 = _mm256_setzero_pd(), nb1 = _mm256_setzero_pd();

    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 va = _mm256_loadu_ps(a + i);
        const __m256 vb = _mm256_loadu_ps(b + i);
        // widen each half to double before accumulating
        const __m256d a_lo = _mm256_cvtps_pd(_mm256_castps256_ps128(va));
        const __m256d a_hi = _mm256_cvtps_pd(_mm256_extractf128_ps(va, 1));
        const __m256d b_lo = _mm256_cvtps_pd(_mm256_castps256_ps128(vb));
        const __m256d b_hi = _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1));
        dot0 = _mm256_fmadd_pd(a_lo, b_lo, dot0);
        dot1 = _mm256_fmadd_pd(a_hi, b_hi, dot1);
        na0 = _mm256_fmadd_pd(a_lo, a_lo, na0);
        na1 = _mm256_fmadd_pd(a_hi, a_hi, na1);
        nb0 = _mm256_fmadd_pd(b_lo, b_lo, nb0);
        nb1 = _mm256_fmadd_pd(b_hi, b_hi, nb1);
    }

    DotNorms r;
    r.dot = hsum(_mm256_add_pd(dot0, dot1));
    r.norm_a = hsum(_mm256_add_pd(na0, na1));
    r.norm_b = hsum(_mm256_add_pd(nb0, nb1));
    for (; i < n; ++i) {
        const double x = a[i];
        const double y = b[i];
        r.dot += x * y;
        r.norm_a += x * x;
        r.norm_b += y * y;
    }
    return r;
}

DotNorms dot_norms_avx2(const double* a, const double* b, std::size_t n) {
    __m256d dot0 = _mm256_setzero_pd(), dot1 = _mm256_setzero_pd();
    __m256d na0 = _mm256_setzero_pd(), na1 = _mm256_setzero_pd();
    __m256d nb0 = _mm256_setzero_pd(), nb1 = _mm256_setzero_pd();

    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d a0 = _mm256_loadu_pd(a + i);
        const __m256d a1 = _mm256_loadu_pd(a + i + 4);
        const __m256d b0 = _mm256_loadu_pd(b + i);
        const __m256d b1 = _mm256_loadu_pd(b + i + 4);
        dot0 = _mm256_fmadd_pd(a0, b0, dot0);
        dot1 = _mm256_fmadd_pd(a1, b1, dot1);
        na0 = _mm256_fmadd_pd(a0, a0, na0);
        na1 = _mm256_fmadd_pd(a1, a1, na1);
        nb0 = _mm256_fmadd_pd(b0, b0, nb0);
        nb1 = _mm256_fmadd_pd(b1, b1, nb1);
    }

    DotNorms r;
    r.dot = hsum(_mm256_add_pd(dot0, dot1));
    r.norm_a = hsum(_mm256_add_pd(na0, na1));
    r.norm_b = hsum(_mm256_add_pd(nb0, nb1));
    for (; i < n; ++i) {
        r.dot += a[i] * b[i];
        r.norm_a += a[i] * a[i];
        r.norm_b += b[i] * b[i];
    }
    return r;
}

}  // namespace sevln::simd

#endif
