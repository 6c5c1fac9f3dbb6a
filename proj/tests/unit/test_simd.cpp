#include <doctest.h>

#include <cmath>
#include <random>

#include "sevln/error.hpp"
#include "sevln/simd/kernels.hpp"

using namespace sevln::simd;

namespace {

// Plain double-precision reference, independent of the scalar kernel.
template <typename T>
DotNorms reference(const std::vector<T>& a, const std::vector<T>& b) {
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<long double>(a[i]) * b[i];
        na += static_cast<long double>(a[i]) * a[i];
        nb += static_cast<long double>(b[i]) * b[i];
    }
    return {static_cast<double>(dot), static_cast<double>(na), static_cast<double>(nb)};
}

void check_close(const DotNorms& got, const DotNorms& want, double scale) {
    const double tol = 1e-12 * scale;
    CHECK(std::abs(got.dot - want.dot) <= tol);
    CHECK(std::abs(got.norm_a - want.norm_a) <= tol);
    CHECK(std::abs(got.norm_b - want.norm_b) <= tol);
}

template <typename T>
void run_equivalence(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (std::size_t n = 0; n <= 70; ++n) {
        std::vector<T> a(n), b(n);
        for (auto& v : a) v = static_cast<T>(normal(rng));
        for (auto& v : b) v = static_cast<T>(normal(rng));
        const DotNorms want = reference(a, b);
        const double scale = 1.0 + want.norm_a + want.norm_b;
        for (Isa isa : supported_isas()) {
            CAPTURE(to_string(isa));
            CAPTURE(n);
            check_close(dot_norms(isa, std::span<const T>(a), std::span<const T>(b)), want, scale);
        }
        check_close(dot_norms(std::span<const T>(a), std::span<const T>(b)), want, scale);
    }
}

}  // namespace

TEST_CASE("scalar is always available and listed first") {
    const auto isas = supported_isas();
    REQUIRE_FALSE(isas.empty());
    CHECK(isas.front() == Isa::scalar);
    CHECK(std::find(isas.begin(), isas.end(), active_isa()) != isas.end());
}

TEST_CASE("every variant matches the reference for float input") { run_equivalence<float>(1); }

TEST_CASE("every variant matches the reference for double input") { run_equivalence<double>(2); }

TEST_CASE("variants agree on large vectors") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(-1, 1);
    std::vector<float> a(768), b(768);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    const DotNorms base = dot_norms(Isa::scalar, std::span<const float>(a), std::span<const float>(b));
    for (Isa isa : supported_isas()) {
        check_close(dot_norms(isa, std::span<const float>(a), std::span<const float>(b)), base, 768.0);
    }
}

TEST_CASE("length mismatch throws") {
    std::vector<float> a(5), b(6);
    CHECK_THROWS_AS(dot_norms(std::span<const float>(a), std::span<const float>(b)),
                    sevln::DimensionError);
}
