#pragma once

// Widefield incoherent PSF from a scalar pupil model. Plane at depth z is
//   h(z) = |FT2[ G(ξ,η) · exp(-2πi z √((n0/λ)² - ξ² - η²)) ]|²,
// with complex pupil G = P·exp(iφ), P the circular aperture of radius NA/λ
// in frequency space, and φ = 2π Σ_j α_j Z_j the aberration phase (α in λ).
// The evanescent region (negative √ argument) is clamped to zero spatial
// frequency advance; with NA < n0 it lies outside the aperture anyway.
// The returned PSF is fftshift-centered per plane and normalized to unit
// 3-D sum; its focal plane sits at stack index nz/2.

#include <complex>
#include <vector>

#include "cocoa/types.hpp"
#include "cocoa/zernike.hpp"

namespace cocoa {

struct OpticalConfig {
    double numerical_aperture = 1.1;
    double wavelength = 0.51;      // emission λ, µm
    double refractive_index = 1.33;
    double lateral_pixel = 0.1;    // µm
    double axial_step = 0.25;      // µm
    int nx = 64, ny = 64, nz = 32;

    void validate() const;  // throws ConfigError
    [[nodiscard]] std::vector<std::string> warnings() const;  // e.g. Nyquist violation
    [[nodiscard]] Pitches pitch() const { return {axial_step, lateral_pixel, lateral_pixel}; }
    [[nodiscard]] Shape3 shape() const { return {nz, ny, nx}; }
};

// Lateral frequency-space sampling shared by pupil, phase, and PSF code.
// Axes are in FFT (wrapped) order: fx[i] = i·Δf for i < nx/2, negative after.
struct PupilGrid {
    int ny = 0, nx = 0;
    double f_aperture = 0.0;  // NA/λ, cycles/µm
    double f_medium = 0.0;    // n0/λ
    std::vector<double> fx, fy;
    std::vector<std::uint8_t> mask;  // 1 inside the aperture (ρ ≤ 1)
    int mask_count = 0;

    [[nodiscard]] double rho(int y, int x) const {
        return std::sqrt(fx[x] * fx[x] + fy[y] * fy[y]) / f_aperture;
    }
    [[nodiscard]] double theta(int y, int x) const { return std::atan2(fy[y], fx[x]); }
};

// Frequency sampling Δf = 1/(n·lateral_pixel); throws ConfigError when the
// aperture circle does not fit strictly inside the Nyquist box.
PupilGrid pupil_grid(const OpticalConfig& cfg);

// Pixel-center sampling of the unit disk on an n×n grid in centered order;
// used for basis diagnostics (orthonormality) independent of any microscope.
PupilGrid unit_disk_grid(int n);

// One sampled Zernike mode (0 outside the mask), row-major ny×nx.
std::vector<double> zernike_map(const PupilGrid& grid, ZernikeIndex nm);

// Axial frequency κ = √((n0/λ)² - ξ² - η²), clamped at 0 past the
// evanescent boundary; the defocus kernel is exp(-2πi z κ).
std::vector<double> axial_frequency(const PupilGrid& grid);

// Aberration phase in radians: φ = 2π Σ α_j Z_j on the mask, 0 outside.
std::vector<double> wavefront_phase(const PupilGrid& grid, const WavefrontAberration& aberration);

struct Psf3D {
    Volume vol;
    Pitches pitch{};
    int focal_plane = 0;
};

// Plane offsets of the output stack relative to focus: (k - nz/2)·dz.
std::vector<double> psf_z_offsets(const OpticalConfig& cfg);

Psf3D psf_3d(const OpticalConfig& cfg, const WavefrontAberration& aberration);

// Explicit plane offsets (µm); normalize=false leaves per-plane energy at
// its Parseval value (used by tests and by Gerchberg-Saxton propagation).
Volume psf_planes(const OpticalConfig& cfg, const WavefrontAberration& aberration,
                  const std::vector<double>& z_offsets, bool normalize);

// --- gradient support -------------------------------------------------
// Forward PSF evaluation that retains the intermediates needed to pull a
// loss gradient on the PSF voxels back to Zernike coefficients.
struct PsfTape {
    PupilGrid grid;
    std::vector<std::complex<double>> pupil;          // G = P e^{iφ}
    std::vector<std::complex<double>> defocus;        // D_z per plane (nz·ny·nx)
    std::vector<std::complex<double>> fields;         // U_z per plane (pre-shift)
    std::vector<std::vector<double>> mode_maps;       // sampled Z_j per basis mode
    std::vector<int> modes;                            // ANSI indices
    double norm_sum = 0.0;                             // pre-normalization 3-D sum
    Volume psf;                                        // normalized, shift-centered
    Shape3 shape{};
};

PsfTape psf_3d_with_tape(const OpticalConfig& cfg, const std::vector<int>& modes,
                         const std::vector<double>& alpha);

// dL/dα given dL/d(normalized PSF voxels); exact reverse of the forward map.
std::vector<double> psf_backward(const PsfTape& tape, const Volume& grad_psf);

}  // namespace cocoa
