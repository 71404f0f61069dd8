#include "cocoa/optics.hpp"

#include <cmath>

#include "cocoa/fft.hpp"

namespace cocoa {

void OpticalConfig::validate() const {
    if (!(numerical_aperture > 0.0)) throw ConfigError("numerical_aperture must be positive");
    if (!(wavelength > 0.0)) throw ConfigError("wavelength must be positive");
    if (!(refractive_index > 0.0)) throw ConfigError("refractive_index must be positive");
    if (!(numerical_aperture < refractive_index))
        throw ConfigError("numerical_aperture must be below the medium index");
    if (!(lateral_pixel > 0.0) || !(axial_step > 0.0))
        throw ConfigError("voxel pitches must be positive");
    if (nx < 4 || ny < 4 || nz < 1) throw ConfigError("grid too small (need nx,ny >= 4, nz >= 1)");
    pupil_grid(*this);  // aperture-fits check
}

std::vector<std::string> OpticalConfig::warnings() const {
    std::vector<std::string> w;
    double nyquist = wavelength / (4.0 * numerical_aperture);
    if (lateral_pixel > nyquist)
        w.push_back("lateral_pixel " + std::to_string(lateral_pixel) +
                    " um exceeds the Nyquist pitch " + std::to_string(nyquist) +
                    " um; fine structure will alias");
    return w;
}

PupilGrid pupil_grid(const OpticalConfig& cfg) {
    PupilGrid g;
    g.ny = cfg.ny;
    g.nx = cfg.nx;
    g.f_aperture = cfg.numerical_aperture / cfg.wavelength;
    g.f_medium = cfg.refractive_index / cfg.wavelength;

    double dfx = 1.0 / (cfg.nx * cfg.lateral_pixel);
    double dfy = 1.0 / (cfg.ny * cfg.lateral_pixel);
    // The aperture circle must sit strictly inside the Nyquist box (the
    // wrapped -n/2 sample has no positive twin, so it must stay masked out).
    if (g.f_aperture / dfx > cfg.nx / 2.0 - 1.0 || g.f_aperture / dfy > cfg.ny / 2.0 - 1.0)
        throw ConfigError("pupil grid too small for the aperture: need NA/lambda < (n/2-1)/(n*pixel)");

    g.fx.resize(cfg.nx);
    g.fy.resize(cfg.ny);
    for (int i = 0; i < cfg.nx; ++i) g.fx[i] = dfx * (i < (cfg.nx + 1) / 2 ? i : i - cfg.nx);
    for (int i = 0; i < cfg.ny; ++i) g.fy[i] = dfy * (i < (cfg.ny + 1) / 2 ? i : i - cfg.ny);

    g.mask.assign(static_cast<std::size_t>(cfg.ny) * cfg.nx, 0);
    for (int y = 0; y < cfg.ny; ++y)
        for (int x = 0; x < cfg.nx; ++x)
            if (g.rho(y, x) <= 1.0) {
                g.mask[static_cast<std::size_t>(y) * cfg.nx + x] = 1;
                ++g.mask_count;
            }
    if (g.mask_count == 0) throw ConfigError("empty aperture mask");
    return g;
}

PupilGrid unit_disk_grid(int n) {
    if (n < 2) throw DomainError("unit_disk_grid needs n >= 2");
    PupilGrid g;
    g.ny = g.nx = n;
    g.f_aperture = 1.0;
    g.f_medium = 2.0;  // arbitrary; unused for basis diagnostics
    g.fx.resize(n);
    g.fy.resize(n);
    for (int i = 0; i < n; ++i) g.fx[i] = g.fy[i] = (2.0 * i + 1.0 - n) / n;
    g.mask.assign(static_cast<std::size_t>(n) * n, 0);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            if (g.rho(y, x) <= 1.0) {
                g.mask[static_cast<std::size_t>(y) * n + x] = 1;
                ++g.mask_count;
            }
    return g;
}

std::vector<double> zernike_map(const PupilGrid& grid, ZernikeIndex nm) {
    std::vector<double> out(grid.mask.size(), 0.0);
    for (int y = 0; y < grid.ny; ++y)
        for (int x = 0; x < grid.nx; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * grid.nx + x;
            if (grid.mask[i]) out[i] = zernike_at(nm, grid.rho(y, x), grid.theta(y, x));
        }
    return out;
}

std::vector<double> wavefront_phase(const PupilGrid& grid, const WavefrontAberration& aberration) {
    std::vector<double> phase(grid.mask.size(), 0.0);
    for (const auto& [j, a] : aberration.coeffs) {
        if (a == 0.0) continue;
        ZernikeIndex nm = from_ansi(j);
        for (int y = 0; y < grid.ny; ++y)
            for (int x = 0; x < grid.nx; ++x) {
                std::size_t i = static_cast<std::size_t>(y) * grid.nx + x;
                if (grid.mask[i])
                    phase[i] += 2.0 * M_PI * a * zernike_at(nm, grid.rho(y, x), grid.theta(y, x));
            }
    }
    return phase;
}

std::vector<double> psf_z_offsets(const OpticalConfig& cfg) {
    std::vector<double> z(cfg.nz);
    for (int k = 0; k < cfg.nz; ++k) z[k] = (k - cfg.nz / 2) * cfg.axial_step;
    return z;
}

std::vector<double> axial_frequency(const PupilGrid& g) {
    std::vector<double> kz(g.mask.size());
    for (int y = 0; y < g.ny; ++y)
        for (int x = 0; x < g.nx; ++x) {
            double arg = g.f_medium * g.f_medium - g.fx[x] * g.fx[x] - g.fy[y] * g.fy[y];
            kz[static_cast<std::size_t>(y) * g.nx + x] = arg > 0.0 ? std::sqrt(arg) : 0.0;
        }
    return kz;
}

namespace {

std::vector<std::complex<double>> complex_pupil(const PupilGrid& g,
                                                const std::vector<double>& phase) {
    std::vector<std::complex<double>> G(g.mask.size(), 0.0);
    for (std::size_t i = 0; i < G.size(); ++i)
        if (g.mask[i]) G[i] = std::polar(1.0, phase[i]);
    return G;
}

}  // namespace

Volume psf_planes(const OpticalConfig& cfg, const WavefrontAberration& aberration,
                  const std::vector<double>& z_offsets, bool normalize) {
    PupilGrid g = pupil_grid(cfg);
    auto phase = wavefront_phase(g, aberration);
    auto G = complex_pupil(g, phase);
    auto kz = axial_frequency(g);

    const std::size_t npix = G.size();
    Volume out({static_cast<int>(z_offsets.size()), cfg.ny, cfg.nx});
    std::vector<std::complex<double>> V(npix), U(npix);
    std::vector<double> plane(npix);
    for (std::size_t k = 0; k < z_offsets.size(); ++k) {
        double z = z_offsets[k];
        for (std::size_t i = 0; i < npix; ++i)
            V[i] = G[i] * std::polar(1.0, -2.0 * M_PI * z * kz[i]);
        fft::forward2d(cfg.ny, cfg.nx, V.data(), U.data());
        for (std::size_t i = 0; i < npix; ++i) plane[i] = std::norm(U[i]);
        fft::fftshift2d(cfg.ny, cfg.nx, plane.data(), out.plane(static_cast<int>(k)));
    }
    if (normalize) {
        double s = vsum(out);
        if (!(s > 0.0)) throw NumericalError("PSF has zero energy");
        for (double& v : out.data) v /= s;
    }
    return out;
}

Psf3D psf_3d(const OpticalConfig& cfg, const WavefrontAberration& aberration) {
    Psf3D psf;
    psf.vol = psf_planes(cfg, aberration, psf_z_offsets(cfg), true);
    psf.pitch = cfg.pitch();
    psf.focal_plane = cfg.nz / 2;
    return psf;
}

PsfTape psf_3d_with_tape(const OpticalConfig& cfg, const std::vector<int>& modes,
                         const std::vector<double>& alpha) {
    if (modes.size() != alpha.size()) throw ShapeError("modes/alpha size mismatch");
    PsfTape t;
    t.grid = pupil_grid(cfg);
    t.modes = modes;
    t.shape = {cfg.nz, cfg.ny, cfg.nx};

    const std::size_t npix = t.grid.mask.size();
    t.mode_maps.reserve(modes.size());
    std::vector<double> phase(npix, 0.0);
    for (std::size_t k = 0; k < modes.size(); ++k) {
        t.mode_maps.push_back(zernike_map(t.grid, from_ansi(modes[k])));
        const auto& zm = t.mode_maps.back();
        for (std::size_t i = 0; i < npix; ++i) phase[i] += 2.0 * M_PI * alpha[k] * zm[i];
    }
    t.pupil = complex_pupil(t.grid, phase);

    auto kz = axial_frequency(t.grid);
    auto zoff = psf_z_offsets(cfg);
    t.defocus.resize(static_cast<std::size_t>(cfg.nz) * npix);
    t.fields.resize(t.defocus.size());
    Volume raw({cfg.nz, cfg.ny, cfg.nx});
    std::vector<std::complex<double>> V(npix);
    std::vector<double> plane(npix);
    for (int k = 0; k < cfg.nz; ++k) {
        std::complex<double>* D = t.defocus.data() + static_cast<std::size_t>(k) * npix;
        std::complex<double>* U = t.fields.data() + static_cast<std::size_t>(k) * npix;
        for (std::size_t i = 0; i < npix; ++i) {
            D[i] = std::polar(1.0, -2.0 * M_PI * zoff[k] * kz[i]);
            V[i] = t.pupil[i] * D[i];
        }
        fft::forward2d(cfg.ny, cfg.nx, V.data(), U);
        for (std::size_t i = 0; i < npix; ++i) plane[i] = std::norm(U[i]);
        fft::fftshift2d(cfg.ny, cfg.nx, plane.data(), raw.plane(k));
    }
    t.norm_sum = vsum(raw);
    if (!(t.norm_sum > 0.0)) throw NumericalError("PSF has zero energy");
    t.psf = raw;
    for (double& v : t.psf.data) v /= t.norm_sum;
    return t;
}

std::vector<double> psf_backward(const PsfTape& t, const Volume& grad_psf) {
    require_shape(grad_psf, t.shape, "psf_backward gradient");
    const std::size_t npix = t.grid.mask.size();
    const int nz = t.shape.nz;

    // Undo the unit-sum normalization: ĥ = h/S ⇒ ∂L/∂h
    // = (g - <g, ĥ>)/S, evaluated in the shifted (centered) layout.
    double gdot = 0.0;
    for (std::size_t i = 0; i < grad_psf.data.size(); ++i)
        gdot += grad_psf.data[i] * t.psf.data[i];
    Volume graw(t.shape);
    for (std::size_t i = 0; i < graw.data.size(); ++i)
        graw.data[i] = (grad_psf.data[i] - gdot) / t.norm_sum;

    // Per plane: |U|² and the FFT pullback onto the pupil.
    std::vector<std::complex<double>> gU(npix), gV(npix);
    std::vector<std::complex<double>> gG(npix, 0.0);
    std::vector<double> gplane(npix);
    for (int k = 0; k < nz; ++k) {
        fft::ifftshift2d(t.shape.ny, t.shape.nx, graw.plane(k), gplane.data());
        const std::complex<double>* U = t.fields.data() + static_cast<std::size_t>(k) * npix;
        const std::complex<double>* D = t.defocus.data() + static_cast<std::size_t>(k) * npix;
        for (std::size_t i = 0; i < npix; ++i) gU[i] = 2.0 * gplane[i] * U[i];
        fft::backward2d(t.shape.ny, t.shape.nx, gU.data(), gV.data());  // adjoint of forward FFT
        for (std::size_t i = 0; i < npix; ++i) gG[i] += std::conj(D[i]) * gV[i];
    }

    // G = P e^{iφ}: ∂L/∂φ = Im(gG · conj(G)); then φ = 2π Σ α_j Z_j.
    std::vector<double> galpha(t.modes.size(), 0.0);
    for (std::size_t m = 0; m < t.modes.size(); ++m) {
        const auto& zm = t.mode_maps[m];
        double acc = 0.0;
        for (std::size_t i = 0; i < npix; ++i)
            if (t.grid.mask[i]) acc += zm[i] * std::imag(gG[i] * std::conj(t.pupil[i]));
        galpha[m] = 2.0 * M_PI * acc;
    }
    return galpha;
}

}  // namespace cocoa
