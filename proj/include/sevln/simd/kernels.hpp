#pragma once

// Dot-product and squared-norm kernels behind cosine scoring.
//
// Every instruction-set variant computes the same three sums in double
// precision; only the summation order differs, so variants agree to rounding
// (checked by the equivalence tests) but not bit-for-bit. dot_norms() picks
// the best variant the running CPU supports, once, and always uses it.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#if defined(__x86_64__) || defined(_M_X64)
#define SEVLN_SIMD_X86 1
#else
#define SEVLN_SIMD_X86 0
#endif

#if defined(__aarch64__) || defined(_M_ARM64)
#define SEVLN_SIMD_NEON 1
#else
#define SEVLN_SIMD_NEON 0
#endif

namespace sevln::simd {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

struct DotNorms {
    double dot = 0.0;
    double norm_a = 0.0;  // sum of squares
    double norm_b = 0.0;
};

DotNorms dot_norms_scalar(const float* a, const float* b, std::size_t n);
DotNorms dot_norms_scalar(const double* a, const double* b, std::size_t n);

#if SEVLN_SIMD_X86
DotNorms dot_norms_avx2(const float* a, const float* b, std::size_t n);
DotNorms dot_norms_avx2(const double* a, const double* b, std::size_t n);
#endif

#if SEVLN_SIMD_NEON
DotNorms dot_norms_neon(const float* a, const float* b, std::size_t n);
DotNorms dot_norms_neon(const double* a, const double* b, std::size_t n);
#endif

/// Variants usable on this CPU, scalar first.
std::vector<Isa> supported_isas();

/// Variant chosen for dispatch: the widest supported one, unless the
/// SEVLN_SIMD environment variable names another supported variant.
Isa active_isa();

DotNorms dot_norms(Isa isa, std::span<const float> a, std::span<const float> b);
DotNorms dot_norms(Isa isa, std::span<const double> a, std::span<const double> b);
DotNorms dot_norms(std::span<const float> a, std::span<const float> b);
DotNorms dot_norms(std::span<const double> a, std::span<const double> b);

}  // namespace sevln::simd
