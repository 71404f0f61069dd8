#include "cocoa/rng.hpp"

#include <cmath>

#include "cocoa/types.hpp"

namespace cocoa {

double Rng::normal() {
    // 1 - u keeps the log argument in (0, 1].
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::int64_t Rng::poisson(double mean) {
    if (!(mean >= 0.0)) throw DomainError("poisson: mean must be non-negative");
    if (mean == 0.0) return 0;
    if (mean < 10.0) {
        // Knuth inversion by multiplication.
        const double limit = std::exp(-mean);
        double p = 1.0;
        std::int64_t k = -1;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k;
    }
    // PTRS (Hörmann 1993): transformed rejection with squeeze, exact for
    // mean >= 10 and O(1) per draw.
    const double slam = std::sqrt(mean);
    const double llam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        double u = uniform() - 0.5;
        double v = uniform();
        double us = 0.5 - std::abs(u);
        double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(kd);
        if (kd < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            kd * llam - mean - std::lgamma(kd + 1.0))
            return static_cast<std::int64_t>(kd);
    }
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(a);
    h = mix(h ^ b);
    h = mix(h ^ c);
    return h;
}

}  // namespace cocoa
