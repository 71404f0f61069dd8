#pragma once

// Adam with bias correction and the cosine-annealing-to-zero schedule used
// by both training phases. One optimizer instance per parameter group
// (structure weights and Zernike coefficients run at different rates).

#include <cstddef>
#include <span>
#include <vector>

#include "cocoa/types.hpp"

namespace cocoa {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(std::size_t n, AdamConfig cfg = {}) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::span<double> params, std::span<const double> grad, double lr);
    [[nodiscard]] long t() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

// lr(t) = lr0 · ½(1 + cos(π t / T)), t = 0..T-1: starts at lr0, anneals
// toward (not exactly reaching) zero.
double cosine_lr(double lr0, long t, long total);

}  // namespace cocoa
