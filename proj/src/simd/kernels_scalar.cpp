#include "sevln/simd/kernels.hpp"

namespace sevln::simd {

namespace {

template <typename T>
DotNorms dot_norms_reference(const T* a, const T* b, std::size_t n) {
    DotNorms r;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = a[i];
        const double y = b[i];
        r.dot += x * y;
        r.norm_a += x * x;
        r.norm_b += y * y;
    }
    return r;
}

}  // namespace

DotNorms dot_norms_scalar(const float* a, const float* b, std::size_t n) {
    return dot_norms_reference(a, b, n);
}

DotNorms dot_norms_scalar(const double* a, const double* b, std::size_t n) {
    return dot_norms_reference(a, b, n);
}

}  // namespace sevln::simd
