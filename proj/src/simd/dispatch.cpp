#include <cstdlib>
#include <stdexcept>
#include <string>

#include "sevln/error.hpp"
#include "sevln/simd/kernels.hpp"

namespace sevln::simd {

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

std::vector<Isa> supported_isas() {
    std::vector<Isa> out{Isa::scalar};
#if SEVLN_SIMD_X86 && (defined(__GNUC__) || defined(__clang__))
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) out.push_back(Isa::avx2);
#endif
#if SEVLN_SIMD_NEON
    out.push_back(Isa::neon);
#endif
    return out;
}

namespace {

Isa detect() {
    const auto isas = supported_isas();
    if (const char* forced = std::getenv("SEVLN_SIMD")) {
        for (Isa isa : isas) {
            if (to_string(isa) == forced) return isa;
        }
    }
    return isas.back();
}

template <typename T>
DotNorms dispatch(Isa isa, std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) {
        throw DimensionError("vector dimensions differ: " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    }
    switch (isa) {
#if SEVLN_SIMD_X86
        case Isa::avx2: return dot_norms_avx2(a.data(), b.data(), a.size());
#endif
#if SEVLN_SIMD_NEON
        case Isa::neon: return dot_norms_neon(a.data(), b.data(), a.size());
#endif
        case Isa::scalar: return dot_norms_scalar(a.data(), b.data(), a.size());
        default: throw std::invalid_argument("kernel variant not built for this target");
    }
}

}  // namespace

Isa active_isa() {
    static const Isa isa = detect();
    return isa;
}

DotNorms dot_norms(Isa isa, std::span<const float> a, std::span<const float> b) {
    return dispatch(isa, a, b);
}

DotNorms dot_norms(Isa isa, std::span<const double> a, std::span<const double> b) {
    return dispatch(isa, a, b);
}

DotNorms dot_norms(std::span<const float> a, std::span<const float> b) {
    return dispatch(active_isa(), a, b);
}

DotNorms dot_norms(std::span<const double> a, std::span<const double> b) {
    return dispatch(active_isa(), a, b);
}

}  // namespace sevln::simd
