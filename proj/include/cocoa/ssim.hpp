#pragma once

// Structural similarity, computed per z-plane with a 2-D Gaussian window
// (valid-mode, so every window sits fully inside the plane) and averaged
// over planes — axial sampling is too coarse for 3-D windows. The
// analytical gradient with respect to the first argument backs the
// optimizer; the window adjoint is exact (zero-embed + full correlation).

#include <vector>

#include "cocoa/types.hpp"

namespace cocoa {

struct SsimSpec {
    int window = 11;        // clamped to the largest odd size that fits
    double sigma = 1.5;
    double k1 = 0.01, k2 = 0.03;
    double dynamic_range = 1.0;  // L; C1=(k1·L)², C2=(k2·L)²
};

// Mean SSIM over planes. When grad_x is non-null it receives
// upstream · d(mean SSIM)/dx (same shape as x).
double ssim_mean(const Volume& x, const Volume& y, const SsimSpec& spec,
                 Volume* grad_x = nullptr, double upstream = 1.0);

std::vector<double> ssim_per_plane(const Volume& x, const Volume& y, const SsimSpec& spec);

}  // namespace cocoa
