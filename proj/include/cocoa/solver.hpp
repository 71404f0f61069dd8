#pragma once

// Self-supervised joint recovery of the wavefront aberration (Zernike
// coefficient vector α) and the 3-D structure (a coordinate MLP 𝒯_θ) from
// a single widefield stack g. The forward chain per iteration is
//   structure = 𝒯_θ(grid) → ĝ = structure ∗ PSF(α) → loss(ĝ, g),
// minimized with two Adam groups (θ at lr_structure, α at lr_zernike) under
// cosine annealing, after an MSE pretrain of 𝒯_θ against g. All gradients
// are exact reverse-mode; the stack is min-max normalized to [0,1] before
// optimization and the recovered structure is scaled back by the range.

#include <cstdint>
#include <vector>

#include "cocoa/adam.hpp"
#include "cocoa/field.hpp"
#include "cocoa/loss.hpp"
#include "cocoa/optics.hpp"
#include "cocoa/types.hpp"
#include "cocoa/zernike.hpp"

namespace cocoa {

struct TrainingError : Error {
    TrainingError(const std::string& msg, std::vector<LossBreakdown> trace_)
        : Error(msg), trace(std::move(trace_)) {}
    std::vector<LossBreakdown> trace;
};

struct TrainConfig {
    int pretrain_iterations = 400;
    int iterations = 2000;
    double lr_pretrain = 1e-2;
    double lr_structure = 5e-3;
    double lr_zernike = 1e-2;
    LossWeights weights{};
    SsimSpec ssim{};
    double alpha_init = 0.05;   // α starts uniform on ±alpha_init (λ)
    std::vector<int> modes;     // empty → the 17-mode default basis
    FieldSpec field;
    bool auto_frequencies = true;  // encoding ladder maxima from the grid
    int margin_z = 0, margin_y = 0, margin_x = 0;  // structure halo per side
    std::uint64_t seed = 0;

    void validate() const;
    [[nodiscard]] std::vector<int> mode_set() const;
};

struct EstimationResult {
    WavefrontAberration aberration;
    Structure3D structure;  // FOV crop, scaled back to input intensity range
    FieldSpec field_spec;
    std::vector<double> field_params;
    std::vector<LossBreakdown> trace;  // one entry per training iteration
    double stack_min = 0.0, stack_range = 1.0;
};

EstimationResult estimate(const ImageStack& stack, const OpticalConfig& optical,
                          const TrainConfig& train);

// --- gradient-check surface -------------------------------------------
// Loss and exact gradients at an explicit (θ, α) point on a normalized
// stack; the finite-difference harness drives these.
LossBreakdown solver_loss(const Volume& g_norm, const OpticalConfig& optical,
                          const TrainConfig& train, const NeuralField& field,
                          const std::vector<double>& alpha);

struct SolverGradients {
    LossBreakdown loss;
    std::vector<double> grad_theta;
    std::vector<double> grad_alpha;
};

SolverGradients solver_gradients(const Volume& g_norm, const OpticalConfig& optical,
                                 const TrainConfig& train, const NeuralField& field,
                                 const std::vector<double>& alpha);

// Encoded extended-grid coordinates for a stack shape under a margin; the
// estimation entry points share this layout (x fastest, then y, then z,
// matching volume raster order).
std::vector<double> grid_coordinates(Shape3 extended);

}  // namespace cocoa
