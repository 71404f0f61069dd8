#pragma once

// Fit loss: (1 - SSIM(estimate, measured)) plus structure-domain
// regularizers — anisotropic total variation (piecewise smoothness) and an
// l1 value-distribution term (sparsity). Terms are stored already weighted
// so total is their plain sum. Both regularizers use sign(0) = 0 as the
// declared subgradient at kinks.

#include <vector>

#include "cocoa/ssim.hpp"
#include "cocoa/types.hpp"

namespace cocoa {

struct LossWeights {
    double tv = 1e-3;
    double l1 = 1e-4;
};

struct LossBreakdown {
    double total = 0.0;
    double ssim_term = 0.0;  // 1 - SSIM
    double tv_term = 0.0;    // weighted
    double l1_term = 0.0;    // weighted
};

// Mean |forward difference| across the three axes (sum of |d| over every
// valid difference slot, divided by the slot count). Unweighted.
double total_variation(const Volume& v, Volume* grad_acc = nullptr, double weight = 1.0);

// Mean |value| over voxels. Unweighted.
double l1_mean(const Volume& v, Volume* grad_acc = nullptr, double weight = 1.0);

// Full loss of an estimate against the measured stack with regularizers on
// the structure grid (which may be larger than the stack when a margin is
// in use). grad_estimate/grad_structure, when non-null, receive dL/d(·).
LossBreakdown loss(const Volume& estimate, const Volume& measured, const Volume& structure,
                   const SsimSpec& ssim_spec, const LossWeights& weights,
                   Volume* grad_estimate = nullptr, Volume* grad_structure = nullptr);

}  // namespace cocoa
