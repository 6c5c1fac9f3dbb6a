#include "sevln/simd/kernels.hpp"

#if SEVLN_SIMD_NEON

#include <arm_neon.h>

namespace sevln::simd {

DotNorms dot_norms_neon(const float* a, const float* b, std::size_t n) {
    float64x2_t dot0 = vdupq_n_f64(0.0), dot1 = vdupq_n_f64(0.0);
    float64x2_t na0 = vdupq_n_f64(0.0), na1 = vdupq_n_f64(0.0);
    float64x2_t nb0 = vdupq_n_f64(0.0), nb1 = vdupq_n_f64(0.0);

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t va = vld1q_f32(a + i);
        const float32x4_t vb = vld1q_f32(b + i);
        const float64x2_t a_lo = vcvt_f64_f32(vget_low_f32(va));
        const float64x2_t a_hi = vcvt_high_f64_f32(va);
        const float64x2_t b_lo = vcvt_f64_f32(vget_low_f32(vb));
        const float64x2_t b_hi = vcvt_high_f64_f32(vb);
        dot0 = vfmaq_f64(dot0, a_lo, b_lo);
        dot1 = vfmaq_f64(dot1, a_hi, b_hi);
        na0 = vfmaq_f64(na0, a_lo, a_lo);
        na1 = vfmaq_f64(na1, a_hi, a_hi);
        nb0 = vfmaq_f64(nb0, b_lo, b_lo);
        nb1 = vfmaq_f64(nb1, b_hi, b_hi);
    }

    DotNorms r;
    r.dot = vaddvq_f64(vaddq_f64(dot0, dot1));
    r.norm_a = vaddvq_f64(vaddq_f64(na0, na1));
    r.norm_b = vaddvq_f64(vaddq_f64(nb0, nb1));
    for (; i < n; ++i) {
        const double x = a[i];
        const double y = b[i];
        r.dot += x * y;
        r.norm_a += x * x;
        r.norm_b += y * y;
    }
    return r;
}

DotNorms dot_norms_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t dot = vdupq_n_f64(0.0), na = vdupq_n_f64(0.0), nb = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t va = vld1q_f64(a + i);
        const float64x2_t vb = vld1q_f64(b + i);
        dot = vfmaq_f64(dot, va, vb);
        na = vfmaq_f64(na, va, va);
        nb = vfmaq_f64(nb, vb, vb);
    }
    DotNorms r{vaddvq_f64(dot), vaddvq_f64(na), vaddvq_f64(nb)};
    for (; i < n; ++i) {
        r.dot += a[i] * b[i];
        r.norm_a += a[i] * a[i];
        r.norm_b += b[i] * b[i];
    }
    return r;
}

}  // namespace sevln::simd

#endif
