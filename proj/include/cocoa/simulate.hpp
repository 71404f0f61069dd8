#pragma once

// Forward acquisition model: image = structure ∗ PSF(aberration), scaled so
// the clean image peaks at a chosen photon budget, then passed through the
// camera (shot noise × gain + Gaussian readout).

#include "cocoa/noise.hpp"
#include "cocoa/optics.hpp"
#include "cocoa/types.hpp"
#include "cocoa/zernike.hpp"

namespace cocoa {

struct SimulationSpec {
    double photons_at_peak = 200.0;
    NoiseModel noise{};

    void validate() const;
};

struct SimulationResult {
    ImageStack stack;  // noisy camera-unit stack
    Volume clean;      // noiseless photon-scale image (same shape)
    Psf3D psf;
};

// The structure grid must match the optical grid (the camera FOV).
SimulationResult simulate_stack(const Structure3D& truth, const OpticalConfig& optical,
                                const WavefrontAberration& aberration,
                                const SimulationSpec& spec);

}  // namespace cocoa
