#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "cocoa/fft.hpp"
#include "cocoa/optics.hpp"

using namespace cocoa;

namespace {

OpticalConfig small_config() {
    OpticalConfig cfg;
    cfg.nx = 32;
    cfg.ny = 32;
    cfg.nz = 16;
    return cfg;
}

}  // namespace

TEST_SUITE("optics") {

TEST_CASE("configuration validation and sampling warnings") {
    OpticalConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.warnings().empty());

    // Lateral sampling coarser than lambda/(4 NA) = 0.116 um violates Nyquist.
    OpticalConfig coarse = cfg;
    coarse.lateral_pixel = 0.15;
    CHECK(!coarse.warnings().empty());

    OpticalConfig bad = cfg;
    bad.numerical_aperture = 1.5;  // exceeds the medium index 1.33
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    // Aperture circle must fit strictly inside the frequency box.
    OpticalConfig tiny = cfg;
    tiny.nx = tiny.ny = 4;
    tiny.lateral_pixel = 0.25;
    CHECK_THROWS_AS(pupil_grid(tiny), ConfigError);
}

TEST_CASE("pupil grid frequencies are in wrapped FFT order") {
    const OpticalConfig cfg = small_config();
    const PupilGrid grid = pupil_grid(cfg);
    const double df = 1.0 / (cfg.nx * cfg.lateral_pixel);
    CHECK(grid.fx[0] == doctest::Approx(0.0));
    CHECK(grid.fx[1] == doctest::Approx(df));
    CHECK(grid.fx[cfg.nx - 1] == doctest::Approx(-df));
    CHECK(grid.fx[cfg.nx / 2] == doctest::Approx(-df * cfg.nx / 2));
    CHECK(grid.f_aperture == doctest::Approx(cfg.numerical_aperture / cfg.wavelength));
    CHECK(grid.mask_count > 0);
    // DC is inside the aperture; the Nyquist corner is outside.
    CHECK(grid.mask[0] == 1);
    CHECK(grid.mask[static_cast<std::size_t>(cfg.nx / 2) * cfg.nx + cfg.nx / 2] == 0);
}

TEST_CASE("basis is orthonormal when sampled on a fine disk") {
    const PupilGrid disk = unit_disk_grid(256);
    const std::vector<int> modes = default_mode_set();
    std::vector<std::vector<double>> maps;
    maps.reserve(modes.size());
    for (int j : modes) maps.push_back(zernike_map(disk, from_ansi(j)));
    for (std::size_t a = 0; a < maps.size(); ++a) {
        for (std::size_t b = a; b < maps.size(); ++b) {
            double dot = 0.0;
            for (std::size_t i = 0; i < maps[a].size(); ++i) dot += maps[a][i] * maps[b][i];
            dot /= disk.mask_count;
            if (a == b)
                CHECK(dot == doctest::Approx(1.0).epsilon(5e-3));
            else
                CHECK(std::abs(dot) < 5e-3);
        }
    }
}

TEST_CASE("aberration phase is 2 pi alpha Z on the mask") {
    const OpticalConfig cfg = small_config();
    const PupilGrid grid = pupil_grid(cfg);
    WavefrontAberration a;
    a.set(12, 0.1);  // spherical: Z(0) = sqrt(5) at the DC pixel (rho = 0)
    const std::vector<double> phase = wavefront_phase(grid, a);
    CHECK(phase[0] ==
          doctest::Approx(2.0 * std::numbers::pi * 0.1 * std::sqrt(5.0)).epsilon(1e-12));
    // Zero outside the mask.
    for (int y = 0; y < grid.ny; ++y)
        for (int x = 0; x < grid.nx; ++x)
            if (!grid.mask[static_cast<std::size_t>(y) * grid.nx + x])
                CHECK(phase[static_cast<std::size_t>(y) * grid.nx + x] == 0.0);
}

TEST_CASE("PSF is normalized, centered, and z-symmetric without aberration") {
    const OpticalConfig cfg = small_config();
    const Psf3D psf = psf_3d(cfg, {});
    CHECK(psf.focal_plane == cfg.nz / 2);
    CHECK(vsum(psf.vol) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vmin(psf.vol) >= 0.0);

    // Peak voxel sits at the lateral center of the focal plane.
    std::size_t peak = 0;
    for (std::size_t i = 0; i < psf.vol.data.size(); ++i)
        if (psf.vol.data[i] > psf.vol.data[peak]) peak = i;
    CHECK(peak == psf.vol.idx(cfg.nz / 2, cfg.ny / 2, cfg.nx / 2));

    // h(+z) = h(-z) for a real pupil.
    const double scale = vmax(psf.vol);
    for (int d = 1; d < cfg.nz / 2; ++d) {
        const double* up = psf.vol.plane(cfg.nz / 2 + d);
        const double* dn = psf.vol.plane(cfg.nz / 2 - d);
        double maxdiff = 0.0;
        for (int i = 0; i < cfg.ny * cfg.nx; ++i)
            maxdiff = std::max(maxdiff, std::abs(up[i] - dn[i]));
        CHECK(maxdiff < 1e-6 * scale);
    }
}

TEST_CASE("plane energy before normalization obeys Parseval") {
    // plane = |FT2[G D]|^2 with |G D| = 1 on the mask, so each plane sums to
    // (nx ny) * mask_count under the unnormalized transform.
    const OpticalConfig cfg = small_config();
    const PupilGrid grid = pupil_grid(cfg);
    WavefrontAberration a;
    a.set(7, 0.15);
    const Volume planes = psf_planes(cfg, a, psf_z_offsets(cfg), /*normalize=*/false);
    const double expect = static_cast<double>(cfg.nx) * cfg.ny * grid.mask_count;
    for (int z = 0; z < cfg.nz; ++z) {
        const double* p = planes.plane(z);
        double sum = 0.0;
        for (int i = 0; i < cfg.ny * cfg.nx; ++i) sum += p[i];
        CHECK(sum == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("optical transfer function is band-limited to 2 NA / lambda") {
    const OpticalConfig cfg = small_config();
    const Psf3D psf = psf_3d(cfg, {});
    // FFT of the focal plane; the modulus must vanish outside twice the
    // aperture radius (autocorrelation support), within one frequency sample.
    const int n = cfg.nx;
    std::vector<std::complex<double>> real(static_cast<std::size_t>(n) * n);
    std::vector<std::complex<double>> plane(real.size());
    const double* h = psf.vol.plane(cfg.nz / 2);
    for (std::size_t i = 0; i < real.size(); ++i) real[i] = h[i];
    fft::forward2d(n, n, real.data(), plane.data());
    const double df = 1.0 / (n * cfg.lateral_pixel);
    const double cutoff = 2.0 * cfg.numerical_aperture / cfg.wavelength + df;
    const double dc = std::abs(plane[0]);
    for (int y = 0; y < n; ++y) {
        const double fy = (y < n / 2 ? y : y - n) * df;
        for (int x = 0; x < n; ++x) {
            const double fx = (x < n / 2 ? x : x - n) * df;
            if (std::hypot(fx, fy) > cutoff)
                CHECK(std::abs(plane[static_cast<std::size_t>(y) * n + x]) < 1e-8 * dc);
        }
    }
}

TEST_CASE("pure defocus shifts the PSF axially by the paraxial amount") {
    // 4 sqrt(3) n0 lambda alpha / NA^2 = 0.583 um at alpha = 0.15, i.e. 2.33
    // planes of 0.25 um; the best-correlating integer shift must be 2 or 3.
    OpticalConfig cfg = small_config();
    cfg.nz = 32;
    const Psf3D ref = psf_3d(cfg, {});
    WavefrontAberration a;
    a.set(4, 0.15);
    const Psf3D shifted = psf_3d(cfg, a);

    const int npix = cfg.ny * cfg.nx;
    double best = -1.0;
    int best_d = 0;
    for (int d = -6; d <= 6; ++d) {
        double corr = 0.0;
        for (int z = 0; z < cfg.nz; ++z) {
            const int zs = z + d;
            if (zs < 0 || zs >= cfg.nz) continue;
            const double* p = ref.vol.plane(z);
            const double* q = shifted.vol.plane(zs);
            for (int i = 0; i < npix; ++i) corr += p[i] * q[i];
        }
        if (corr > best) {
            best = corr;
            best_d = d;
        }
    }
    CHECK(std::abs(best_d) >= 2);
    CHECK(std::abs(best_d) <= 3);
}

TEST_CASE("coma breaks the PSF's axial symmetry but keeps normalization") {
    const OpticalConfig cfg = small_config();
    WavefrontAberration a;
    a.set(7, 0.15);
    const Psf3D psf = psf_3d(cfg, a);
    CHECK(vsum(psf.vol) == doctest::Approx(1.0).epsilon(1e-12));
    const Psf3D clean = psf_3d(cfg, {});
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < psf.vol.data.size(); ++i) {
        dot += psf.vol.data[i] * clean.vol.data[i];
        na += psf.vol.data[i] * psf.vol.data[i];
        nb += clean.vol.data[i] * clean.vol.data[i];
    }
    CHECK(dot / std::sqrt(na * nb) < 0.999);  // visibly different from the clean PSF
}

TEST_CASE("PSF gradient against finite differences") {
    OpticalConfig cfg;
    cfg.nx = cfg.ny = 16;
    cfg.nz = 7;
    const std::vector<int> modes{3, 7};
    std::vector<double> alpha{0.04, -0.03};

    // Random fixed upstream gradient; compare dL/d alpha for L = <G, psf>.
    const PsfTape tape = psf_3d_with_tape(cfg, modes, alpha);
    Volume up(tape.psf.shape);
    for (std::size_t i = 0; i < up.data.size(); ++i)
        up.data[i] = std::sin(0.37 * static_cast<double>(i) + 0.2);
    const std::vector<double> grad = psf_backward(tape, up);
    REQUIRE(grad.size() == modes.size());

    const double h = 1e-6;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        auto eval = [&](double delta) {
            std::vector<double> a2 = alpha;
            a2[k] += delta;
            const PsfTape t2 = psf_3d_with_tape(cfg, modes, a2);
            double s = 0.0;
            for (std::size_t i = 0; i < up.data.size(); ++i) s += up.data[i] * t2.psf.data[i];
            return s;
        };
        const double fd = (eval(h) - eval(-h)) / (2 * h);
        CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-6));
    }
}

}  // TEST_SUITE
