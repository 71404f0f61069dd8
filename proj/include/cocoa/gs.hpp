#pragma once

// Multi-plane Gerchberg-Saxton phase retrieval from a bead (point-source)
// stack. Each z-plane supplies an amplitude target; iterations propagate
// the pupil to every plane with the defocus kernel, replace amplitudes,
// propagate back, average the pupil estimates, and re-impose the aperture
// support with unit amplitude (phase-only pupil). The recovered phase is
// then least-squares fitted with Zernike modes plus piston/tip/tilt
// nuisance regressors; when the phase straddles a wrap the fit runs on
// wrapped neighbor differences instead of absolute phase.

#include <vector>

#include "cocoa/optics.hpp"
#include "cocoa/types.hpp"
#include "cocoa/zernike.hpp"

namespace cocoa {

struct GsConfig {
    int iterations = 100;
    bool subtract_background = true;  // per-plane minimum
    bool recenter = true;             // roll the bead to the lateral center
    std::vector<int> modes;           // fit basis; empty → the 17-mode default

    void validate() const;
};

struct GsResult {
    WavefrontAberration aberration;  // fitted coefficients (λ units)
    std::vector<double> phase;       // recovered pupil phase, radians, ny×nx (0 off-mask)
    double fit_rms_residual = 0.0;   // radians, after nuisance removal
    bool used_gradient_fit = false;
};

GsResult gerchberg_saxton(const ImageStack& bead_stack, const OpticalConfig& optical,
                          const GsConfig& cfg);

// Fit φ ≈ 2π Σ_j α_j Z_j (+ piston/tip/tilt nuisance) over the aperture.
// Returns coefficients in λ units for `modes` only.
WavefrontAberration fit_zernike_phase(const PupilGrid& grid, const std::vector<double>& phase,
                                      const std::vector<int>& modes,
                                      double* rms_residual = nullptr,
                                      bool* used_gradient_fit = nullptr);

}  // namespace cocoa
