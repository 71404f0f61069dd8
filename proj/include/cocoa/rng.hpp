#pragma once

// Deterministic random source. mt19937_64 is bit-exact across platforms by
// the standard; the distribution mappings are implemented here (not via
// std::*_distribution, whose output is implementation-defined) so streams
// reproduce across compilers.

#include <cstdint>
#include <random>

namespace cocoa {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t integer() { return gen_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Standard normal via Box-Muller; two uniforms per draw, no cached
    // partner, so consumption per call is fixed.
    double normal();
    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    // Exact Poisson draw for any mean >= 0: Knuth inversion below 10,
    // Hörmann's PTRS transformed rejection above.
    std::int64_t poisson(double mean);

private:
    std::mt19937_64 gen_;
};

// Stream-splitting hash (splitmix64 over the concatenated words); used to
// derive per-point seeds as hash(global seed, indices...).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0x9e3779b97f4a7c15ull,
                       std::uint64_t c = 0xbf58476d1ce4e5b9ull);

}  // namespace cocoa
