#include "cocoa/loss.hpp"

#include <cmath>

namespace cocoa {

namespace {
inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }
}

double total_variation(const Volume& v, Volume* grad_acc, double weight) {
    const int nz = v.shape.nz, ny = v.shape.ny, nx = v.shape.nx;
    const std::size_t slots = static_cast<std::size_t>(std::max(nz - 1, 0)) * ny * nx +
                              static_cast<std::size_t>(nz) * std::max(ny - 1, 0) * nx +
                              static_cast<std::size_t>(nz) * ny * std::max(nx - 1, 0);
    if (slots == 0) return 0.0;
    const double w = weight / static_cast<double>(slots);
    double acc = 0.0;
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const double c = v.at(z, y, x);
                if (z + 1 < nz) {
                    double d = v.at(z + 1, y, x) - c;
                    acc += std::abs(d);
                    if (grad_acc) {
                        grad_acc->at(z + 1, y, x) += w * sgn(d);
                        grad_acc->at(z, y, x) -= w * sgn(d);
                    }
                }
                if (y + 1 < ny) {
                    double d = v.at(z, y + 1, x) - c;
                    acc += std::abs(d);
                    if (grad_acc) {
                        grad_acc->at(z, y + 1, x) += w * sgn(d);
                        grad_acc->at(z, y, x) -= w * sgn(d);
                    }
                }
                if (x + 1 < nx) {
                    double d = v.at(z, y, x + 1) - c;
                    acc += std::abs(d);
                    if (grad_acc) {
                        grad_acc->at(z, y, x + 1) += w * sgn(d);
                        grad_acc->at(z, y, x) -= w * sgn(d);
                    }
                }
            }
    return acc / static_cast<double>(slots);
}

double l1_mean(const Volume& v, Volume* grad_acc, double weight) {
    if (v.data.empty()) return 0.0;
    const double w = weight / static_cast<double>(v.data.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < v.data.size(); ++i) {
        acc += std::abs(v.data[i]);
        if (grad_acc) grad_acc->data[i] += w * sgn(v.data[i]);
    }
    return acc / static_cast<double>(v.data.size());
}

LossBreakdown loss(const Volume& estimate, const Volume& measured, const Volume& structure,
                   const SsimSpec& ssim_spec, const LossWeights& weights, Volume* grad_estimate,
                   Volume* grad_structure) {
    require_shape(measured, estimate.shape, "loss measured stack");
    LossBreakdown b;
    // d(1 - SSIM)/d(estimate) = -d(SSIM)/d(estimate)
    b.ssim_term = 1.0 - ssim_mean(estimate, measured, ssim_spec, grad_estimate, -1.0);
    if (grad_structure) *grad_structure = Volume(structure.shape);  // assign, never accumulate
    b.tv_term = weights.tv * total_variation(structure, grad_structure, weights.tv);
    b.l1_term = weights.l1 * l1_mean(structure, grad_structure, weights.l1);
    b.total = b.ssim_term + b.tv_term + b.l1_term;
    return b;
}

}  // namespace cocoa
