#pragma once

// Camera model: pixel = β·Poisson(c) + Normal(0, n_r), applied voxel by
// voxel in raster order (one Poisson then one Normal draw each), so a fixed
// seed reproduces the stack bit for bit.

#include <cstdint>

#include "cocoa/types.hpp"

namespace cocoa {

struct NoiseModel {
    double gain = 2.19;     // β, pixel values per photon
    double readout = 1.6;   // n_r, pixel-value std
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

// `expected_photons` holds per-voxel photon means c ≥ 0 (DomainError on
// negatives or non-finite values).
ImageStack apply_noise(const Volume& expected_photons, Pitches pitch, const NoiseModel& model);

}  // namespace cocoa
