#include "cocoa/gs.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "cocoa/fft.hpp"
#include "cocoa/linalg.hpp"

namespace cocoa {

namespace {

double wrap_to_pi(double d) {
    return d - 2.0 * M_PI * std::round(d / (2.0 * M_PI));
}

void roll_plane(const double* in, double* out, int ny, int nx, int dy, int dx) {
    dy = ((dy % ny) + ny) % ny;
    dx = ((dx % nx) + nx) % nx;
    for (int y = 0; y < ny; ++y) {
        const double* src = in + static_cast<std::size_t>(y) * nx;
        double* dst = out + static_cast<std::size_t>((y + dy) % ny) * nx;
        for (int x = 0; x < nx; ++x) dst[(x + dx) % nx] = src[x];
    }
}

}  // namespace

void GsConfig::validate() const {
    if (iterations < 1) throw ConfigError("phase retrieval needs at least one iteration");
    for (int j : modes) {
        from_ansi(j);
        if (j <= 2)
            throw ConfigError("mode " + std::to_string(j) +
                              ": piston/tip/tilt are fitted as nuisance terms, not modes");
    }
}

WavefrontAberration fit_zernike_phase(const PupilGrid& grid, const std::vector<double>& phase,
                                      const std::vector<int>& modes, double* rms_residual,
                                      bool* used_gradient_fit) {
    if (phase.size() != grid.mask.size()) throw ShapeError("phase map does not match the grid");
    if (modes.empty()) throw ConfigError("empty fit basis");
    for (int j : modes) {
        from_ansi(j);
        if (j <= 2) throw ConfigError("piston/tip/tilt are nuisance regressors, not fit modes");
    }

    const std::size_t n_modes = modes.size();
    std::vector<std::vector<double>> maps;
    maps.reserve(n_modes + 3);
    for (int j : modes) maps.push_back(zernike_map(grid, from_ansi(j)));
    for (int j : {0, 1, 2}) maps.push_back(zernike_map(grid, from_ansi(j)));

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < phase.size(); ++i)
        if (grid.mask[i]) {
            lo = std::min(lo, phase[i]);
            hi = std::max(hi, phase[i]);
        }
    if (!(hi >= lo)) throw InputError("empty aperture mask");
    // A range hugging the full (-π, π] span means arg() wrapped; absolute
    // values are then meaningless but neighbor differences still are.
    const bool gradient = (hi - lo) > 1.9 * M_PI;
    if (used_gradient_fit) *used_gradient_fit = gradient;

    std::vector<double> design, target;
    std::size_t cols;
    if (!gradient) {
        cols = n_modes + 3;
        for (std::size_t i = 0; i < phase.size(); ++i) {
            if (!grid.mask[i]) continue;
            for (const auto& m : maps) design.push_back(m[i]);
            target.push_back(phase[i]);
        }
    } else {
        cols = n_modes + 2;  // piston's difference vanishes; tip/tilt stay
        auto add_pair = [&](std::size_t p, std::size_t q) {
            for (std::size_t c = 0; c < maps.size(); ++c) {
                if (c == n_modes) continue;  // skip piston
                design.push_back(maps[c][p] - maps[c][q]);
            }
            target.push_back(wrap_to_pi(phase[p] - phase[q]));
        };
        for (int y = 0; y < grid.ny; ++y)
            for (int x = 0; x < grid.nx; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * grid.nx + x;
                if (!grid.mask[i]) continue;
                if (x + 1 < grid.nx && grid.mask[i + 1]) add_pair(i + 1, i);
                if (y + 1 < grid.ny && grid.mask[i + grid.nx]) add_pair(i + grid.nx, i);
            }
    }
    const std::size_t rows = target.size();
    if (rows < cols) throw InputError("aperture too small to fit the requested modes");
    const std::vector<double> coef = lstsq(design, rows, cols, target);

    if (rms_residual) {
        double ss = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            double pred = 0.0;
            for (std::size_t c = 0; c < cols; ++c) pred += design[r * cols + c] * coef[c];
            const double d = target[r] - pred;
            ss += d * d;
        }
        *rms_residual = std::sqrt(ss / static_cast<double>(rows));
    }

    WavefrontAberration out;
    for (std::size_t k = 0; k < n_modes; ++k) out.set(modes[k], coef[k] / (2.0 * M_PI));
    return out;
}

GsResult gerchberg_saxton(const ImageStack& bead_stack, const OpticalConfig& optical,
                          const GsConfig& cfg) {
    optical.validate();
    cfg.validate();
    require_shape(bead_stack.vol, optical.shape(), "bead stack");
    if (!all_finite(bead_stack.vol)) throw InputError("bead stack contains non-finite values");

    const int nz = optical.nz, ny = optical.ny, nx = optical.nx;
    const std::size_t npix = static_cast<std::size_t>(ny) * nx;
    const double N = static_cast<double>(npix);
    const PupilGrid grid = pupil_grid(optical);

    Volume meas = bead_stack.vol;
    for (int k = 0; k < nz; ++k) {
        double* p = meas.plane(k);
        double lo = cfg.subtract_background ? *std::min_element(p, p + npix) : 0.0;
        for (std::size_t i = 0; i < npix; ++i) p[i] = std::max(p[i] - lo, 0.0);
    }

    if (cfg.recenter) {
        // Lateral intensity centroid of the z-summed image → grid center.
        double sy = 0.0, sx = 0.0, st = 0.0;
        for (int k = 0; k < nz; ++k) {
            const double* p = meas.plane(k);
            for (int y = 0; y < ny; ++y)
                for (int x = 0; x < nx; ++x) {
                    const double v = p[static_cast<std::size_t>(y) * nx + x];
                    sy += v * y;
                    sx += v * x;
                    st += v;
                }
        }
        if (!(st > 0.0)) throw InputError("bead stack has no signal");
        const int dy = ny / 2 - static_cast<int>(std::lround(sy / st));
        const int dx = nx / 2 - static_cast<int>(std::lround(sx / st));
        if (dy != 0 || dx != 0) {
            std::vector<double> tmp(npix);
            for (int k = 0; k < nz; ++k) {
                roll_plane(meas.plane(k), tmp.data(), ny, nx, dy, dx);
                std::copy(tmp.begin(), tmp.end(), meas.plane(k));
            }
        }
    }

    // Amplitude targets in wrapped (FFT) order, each plane's energy pinned
    // to the Parseval value N·mask_count of a unit-amplitude pupil.
    std::vector<int> active;
    std::vector<std::vector<double>> amp(nz);
    {
        std::vector<double> centered(npix);
        for (int k = 0; k < nz; ++k) {
            const double* p = meas.plane(k);
            for (std::size_t i = 0; i < npix; ++i) centered[i] = std::sqrt(p[i]);
            amp[k].resize(npix);
            fft::ifftshift2d(ny, nx, centered.data(), amp[k].data());
            double e = 0.0;
            for (double a : amp[k]) e += a * a;
            if (!(e > 0.0)) continue;  // empty plane carries no constraint
            const double s = std::sqrt(N * grid.mask_count / e);
            for (double& a : amp[k]) a *= s;
            active.push_back(k);
        }
    }
    if (active.size() < 2) throw InputError("phase retrieval needs at least two non-empty planes");

    const std::vector<double> kz = axial_frequency(grid);
    const std::vector<double> zoff = psf_z_offsets(optical);
    std::vector<std::complex<double>> defocus(static_cast<std::size_t>(nz) * npix);
    for (int k = 0; k < nz; ++k)
        for (std::size_t i = 0; i < npix; ++i)
            defocus[static_cast<std::size_t>(k) * npix + i] =
                std::polar(1.0, -2.0 * M_PI * zoff[k] * kz[i]);

    std::vector<std::complex<double>> G(npix);
    for (std::size_t i = 0; i < npix; ++i) G[i] = grid.mask[i] ? 1.0 : 0.0;

    std::vector<std::complex<double>> V(npix), u(npix), gsum(npix);
    for (int it = 0; it < cfg.iterations; ++it) {
        std::fill(gsum.begin(), gsum.end(), std::complex<double>(0.0));
        for (int k : active) {
            const std::complex<double>* D = defocus.data() + static_cast<std::size_t>(k) * npix;
            for (std::size_t i = 0; i < npix; ++i) V[i] = G[i] * D[i];
            fft::forward2d(ny, nx, V.data(), u.data());
            for (std::size_t i = 0; i < npix; ++i) {
                const double mag = std::abs(u[i]);
                u[i] = mag > 0.0 ? amp[k][i] * (u[i] / mag) : std::complex<double>(amp[k][i]);
            }
            fft::backward2d(ny, nx, u.data(), V.data());
            for (std::size_t i = 0; i < npix; ++i)
                gsum[i] += (V[i] / N) * std::conj(D[i]);
        }
        // Mean pupil estimate, projected back to unit amplitude on the mask.
        for (std::size_t i = 0; i < npix; ++i) {
            if (!grid.mask[i]) {
                G[i] = 0.0;
            } else {
                const double mag = std::abs(gsum[i]);
                G[i] = mag > 0.0 ? gsum[i] / mag : std::complex<double>(1.0);
            }
        }
    }

    GsResult out;
    out.phase.assign(npix, 0.0);
    for (std::size_t i = 0; i < npix; ++i)
        if (grid.mask[i]) out.phase[i] = std::arg(G[i]);
    const std::vector<int> fit_modes = cfg.modes.empty() ? default_mode_set() : cfg.modes;
    out.aberration = fit_zernike_phase(grid, out.phase, fit_modes, &out.fit_rms_residual,
                                       &out.used_gradient_fit);
    return out;
}

}  // namespace cocoa
