#pragma once

// Degradation sweeps: image a fixed phantom across a ladder of aberration
// amplitudes (variable "rms") or illumination levels (variable "snr"),
// estimate structure+wavefront at every point, and score each against the
// reconstruction of an un-aberrated reference acquisition. Two-segment
// piecewise-linear fits of PCC-vs-x and EMD-vs-x locate the cutoff.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cocoa/metrics.hpp"
#include "cocoa/noise.hpp"
#include "cocoa/phantom.hpp"
#include "cocoa/solver.hpp"

namespace cocoa {

struct SweepSpec {
    std::string variable = "rms";  // "rms" | "snr" (photon budget ladder)
    std::vector<double> values;    // strictly increasing
    int repeats = 3;
    std::string modes = "low";     // "low" | "high" | "fixed"
    int fixed_mode = 7;
    double fixed_rms = 0.15;       // aberration amplitude for "snr" sweeps
    double photons = 200.0;        // illumination for "rms" sweeps + reference

    void validate() const;
    [[nodiscard]] std::vector<int> mode_set() const;
};

struct SweepPoint {
    double x = 0.0;
    int repeat = 0;
    bool ok = false;
    std::string error;
    double pcc = 0.0, emd = 0.0, snr = 0.0, sbr = 0.0, rms_error = 0.0;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::vector<double> xs_used, pcc_mean, emd_mean;  // per-x means over ok repeats
    std::optional<PiecewiseFit> pcc_fit, emd_fit;
};

// Per-point seed = mix_seed(seed, value index, repeat); failures are
// recorded on the point and the sweep continues.
SweepResult run_sweep(const SweepSpec& spec, const PhantomSpec& phantom,
                      const OpticalConfig& optical, const NoiseModel& noise,
                      const TrainConfig& train, std::uint64_t seed);

}  // namespace cocoa
