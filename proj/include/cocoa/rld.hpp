#pragma once

// Richardson-Lucy deconvolution baselines. Non-blind iterates the classic
// multiplicative update s ← s · Cᵀ(g / (C s + ε)) with a known PSF; blind
// alternates that update with the mirrored one for the PSF (re-normalized
// to unit sum each round), then runs a fresh non-blind pass with the
// learned PSF. ε = floor_scale · max(g) guards empty denominators, and
// negative camera samples are clamped to zero on entry.

#include "cocoa/types.hpp"

namespace cocoa {

struct RlConfig {
    int iterations = 100;
    double floor_scale = 1e-12;

    void validate() const;
};

Volume richardson_lucy(const Volume& image, const Volume& psf, const RlConfig& cfg);

struct BlindRlConfig {
    int alternations = 100;      // paired image/PSF multiplicative updates
    int final_iterations = 100;  // non-blind pass with the learned PSF
    double floor_scale = 1e-12;

    void validate() const;
};

struct BlindRlResult {
    Volume image;
    Volume psf;
};

// psf_init must match the image shape (the roles swap symmetrically).
BlindRlResult blind_richardson_lucy(const Volume& image, const Volume& psf_init,
                                    const BlindRlConfig& cfg);

}  // namespace cocoa
