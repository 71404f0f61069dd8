#pragma once

// Simulated adaptive-optics loop: image the sample through the current
// residual aberration, estimate the wavefront from that stack alone, apply
// the negated estimate as the correction, repeat. Per round it records the
// residual RMS and the image contrast of a stack acquired after the
// correction.

#include <vector>

#include "cocoa/simulate.hpp"
#include "cocoa/solver.hpp"

namespace cocoa {

struct CorrectionConfig {
    int rounds = 3;
    SimulationSpec sim{};
    TrainConfig train{};

    void validate() const;
};

struct CorrectionRound {
    int round = 0;                 // 1-based
    WavefrontAberration applied;   // aberration in effect when imaging
    WavefrontAberration estimate;  // wavefront estimated from that stack
    double residual_rms = 0.0;     // RMS after subtracting the estimate (λ)
    double contrast = 0.0;         // p99/p1 of the post-correction MIP
};

std::vector<CorrectionRound> iterative_correction(const Structure3D& truth,
                                                  const OpticalConfig& optical,
                                                  const WavefrontAberration& initial,
                                                  const CorrectionConfig& cfg);

}  // namespace cocoa
