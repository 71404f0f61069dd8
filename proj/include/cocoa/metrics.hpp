#pragma once

// Quantitative evaluation: camera gain calibration, photon-budget SNR,
// signal-to-background ratio via a two-component Gaussian mixture, Pearson
// correlation, sliced Wasserstein distance between intensity distributions,
// percentile contrast, radially averaged power spectra, wavefront RMS
// error, and continuous two-segment piecewise-linear cutoff fits.

#include <cstdint>
#include <optional>
#include <vector>

#include "cocoa/types.hpp"
#include "cocoa/zernike.hpp"

namespace cocoa {

// Gain β from a sequence of frames at constant illumination (stack planes
// are temporal replicates): median over pixels of temporal variance/mean.
// Pixels with non-positive mean are excluded; all excluded → InputError.
double camera_gain(const Volume& frames);

// SNR = (ȳ/β)/√(ȳ/β + (n_r/β)²), ȳ = mean pixel value over mask voxels.
double snr(const Volume& stack, const std::vector<std::uint8_t>& signal_mask, double gain,
           double readout);

struct SbrConfig {
    double lowpass_sigma = 1.0;   // voxels, 3-D Gaussian denoise
    double highpass_sigma = 10.0;  // voxels, broad blur subtracted as DC
    int max_em_iterations = 100;
    double em_tolerance = 1e-8;   // on mean log-likelihood change

    void validate() const;
};

struct SbrResult {
    double sbr = 0.0;
    std::vector<std::uint8_t> signal_mask, background_mask;
    bool converged = false;
    int em_iterations = 0;
};

// Pipeline: low-pass → subtract high-pass blur → 1-D two-component EM fit
// (means initialized at the 10th/90th percentiles) → posterior-classified
// voxels → SBR = mean(original | signal)/mean(original | background).
SbrResult sbr(const Volume& stack, const SbrConfig& cfg = {});

// Pearson correlation coefficient; zero variance → DomainError.
double pcc(const Volume& a, const Volume& b);

// Sliced Wasserstein distance between intensity distributions: voxels
// become points at their centers (µm) weighted by normalized intensity;
// `projections` uniform directions each contribute a 1-D p-Wasserstein
// distance; returns (mean of Wᵖ over directions)^(1/p). Negative voxel
// values are clamped to zero; zero total mass → DomainError.
double emd_sliced(const Volume& a, const Volume& b, Pitches pitch, int projections = 200,
                  int p = 2, std::uint64_t seed = 0);

// Linear-interpolated percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

// p99/p1 of the given image (pass a MIP for stack contrast); p1 ≤ 0 →
// DomainError (an offset is required first).
double image_contrast(const Volume& image);

// Lateral maximum-intensity projection (1×ny×nx).
Volume mip_z(const Volume& v);

struct RadialPsd {
    std::vector<double> freq;         // annulus centers, µm⁻¹
    std::vector<double> power;        // mean |FT|²/N per annulus
    std::vector<std::size_t> count;   // samples per annulus
};

// Radially averaged power spectrum of a square 2-D image (nz must be 1);
// Σ power·count equals the image energy Σv² (Parseval).
RadialPsd radial_psd(const Volume& image, double pixel);

// ℓ2 norm of coefficient differences over the union of modes (λ units).
double rms_wavefront_error(const WavefrontAberration& a, const WavefrontAberration& b);

struct PiecewiseFit {
    double breakpoint = 0.0;
    double slope1 = 0.0, intercept1 = 0.0;  // x ≤ breakpoint
    double slope2 = 0.0, intercept2 = 0.0;  // x > breakpoint
    double sse = 0.0;
};

// Continuous two-segment least-squares fit; the breakpoint is grid-searched
// between the first and last interior x at resolution (x-range)/100, ties
// toward the smaller breakpoint. Needs ≥ 4 strictly increasing xs.
PiecewiseFit piecewise_cutoff(const std::vector<double>& xs, const std::vector<double>& ys);

struct MetricsReport {
    std::optional<double> snr, sbr, pcc, emd, contrast, rms_wavefront_error;
    std::optional<RadialPsd> psd;
};

}  // namespace cocoa
