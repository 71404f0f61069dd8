#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "cocoa/conv.hpp"
#include "cocoa/gs.hpp"
#include "cocoa/metrics.hpp"
#include "cocoa/phantom.hpp"
#include "cocoa/rld.hpp"

using namespace cocoa;

namespace {

constexpr double kPi = std::numbers::pi;

struct Scene {
    Volume truth;
    Volume image;  // truth blurred by the PSF
    Psf3D psf;
};

Scene blurred_bead_scene(const OpticalConfig& optics, const WavefrontAberration& ab,
                         std::uint64_t seed) {
    PhantomSpec ph;
    ph.shape = optics.shape();
    ph.pitch = optics.pitch();
    ph.bead_count = 4;
    ph.brightness = 100.0;
    ph.seed = seed;
    Scene sc;
    sc.truth = make_phantom(ph).vol;
    sc.psf = psf_3d(optics, ab);
    sc.image = convolve_3d(sc.truth, sc.psf.vol, sc.truth.shape);
    return sc;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("deconvolution config validation") {
    RlConfig rl;
    CHECK_NOTHROW(rl.validate());
    rl.iterations = 0;
    CHECK_THROWS_AS(rl.validate(), ConfigError);
    rl.iterations = 10;
    rl.floor_scale = 0.0;
    CHECK_THROWS_AS(rl.validate(), ConfigError);

    BlindRlConfig bl;
    CHECK_NOTHROW(bl.validate());
    bl.alternations = 0;
    CHECK_THROWS_AS(bl.validate(), ConfigError);
    bl.alternations = 5;
    bl.final_iterations = 0;
    CHECK_THROWS_AS(bl.validate(), ConfigError);
}

TEST_CASE("identity kernel leaves the measured image fixed") {
    Volume g({3, 6, 6});
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = 1.0 + (i % 7);
    Volume delta({3, 3, 3}, 0.0);
    delta.at(1, 1, 1) = 1.0;  // centered impulse -> convolution is identity
    RlConfig cfg;
    cfg.iterations = 5;
    const Volume out = richardson_lucy(g, delta, cfg);
    for (std::size_t i = 0; i < g.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(g.data[i]).epsilon(1e-9));
}

TEST_CASE("deconvolving with the true kernel sharpens a bead image") {
    OpticalConfig optics;
    optics.nx = optics.ny = 32;
    optics.nz = 12;
    const Scene sc = blurred_bead_scene(optics, {}, 9);
    const double before = pcc(sc.image, sc.truth);

    // Early-stopped: past ~20 iterations the updates concentrate bead mass
    // into near-deltas and correlation with the soft-edged truth spheres
    // falls again (0.81 at 10 iterations, 0.73 at 40 on this scene).
    RlConfig cfg;
    cfg.iterations = 10;
    const Volume rec = richardson_lucy(sc.image, sc.psf.vol, cfg);
    const double after = pcc(rec, sc.truth);
    CHECK(after > before + 0.05);
    CHECK(vmin(rec) >= 0.0);
    CHECK(all_finite(rec));
}

TEST_CASE("degenerate deconvolution inputs are rejected") {
    const Volume zeros({2, 4, 4}, 0.0);
    const Volume psf({1, 3, 3}, 1.0 / 9.0);
    RlConfig cfg;
    cfg.iterations = 2;
    CHECK_THROWS_AS(richardson_lucy(zeros, psf, cfg), InputError);

    Volume bad({2, 4, 4}, 1.0);
    bad.data[3] = std::nan("");
    CHECK_THROWS_AS(richardson_lucy(bad, psf, cfg), InputError);

    Volume good({2, 4, 4}, 1.0);
    good.data[0] = 5.0;
    Volume bad_psf = psf;
    bad_psf.data[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(richardson_lucy(good, bad_psf, cfg), InputError);

    // Negative camera samples are clamped on entry, not an error.
    Volume neg({2, 4, 4}, 1.0);
    neg.data[1] = -3.0;
    CHECK_NOTHROW(richardson_lucy(neg, psf, cfg));
}

TEST_CASE("blind deconvolution returns a unit-mass kernel and helps the image") {
    OpticalConfig optics;
    optics.nx = optics.ny = 32;
    optics.nz = 12;
    WavefrontAberration ab;
    ab.set(7, 0.1);
    const Scene sc = blurred_bead_scene(optics, ab, 9);

    BlindRlConfig cfg;
    cfg.alternations = 10;
    cfg.final_iterations = 10;
    const Volume psf0 = psf_3d(optics, {}).vol;  // unaberrated starting kernel
    const BlindRlResult res = blind_richardson_lucy(sc.image, psf0, cfg);

    CHECK(res.psf.shape.nz == sc.image.shape.nz);
    CHECK(vsum(res.psf) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(vmin(res.psf) >= 0.0);
    CHECK(vmin(res.image) >= 0.0);
    CHECK(all_finite(res.image));
    CHECK(pcc(res.image, sc.truth) > pcc(sc.image, sc.truth));

    const Volume small({1, 3, 3}, 1.0);
    CHECK_THROWS_AS(blind_richardson_lucy(sc.image, small, cfg), ShapeError);
    const Volume hollow(sc.image.shape, 0.0);
    CHECK_THROWS_AS(blind_richardson_lucy(sc.image, hollow, cfg), InputError);
}

TEST_CASE("pupil phase fitting recovers planted coefficients exactly") {
    OpticalConfig optics;
    optics.nx = optics.ny = 64;
    const PupilGrid grid = pupil_grid(optics);
    const std::size_t npix = grid.mask.size();

    const auto z5 = zernike_map(grid, from_ansi(5));
    const auto z12 = zernike_map(grid, from_ansi(12));
    const auto z0 = zernike_map(grid, from_ansi(0));
    const auto z1 = zernike_map(grid, from_ansi(1));
    const auto z2 = zernike_map(grid, from_ansi(2));
    std::vector<double> phase(npix, 0.0);
    for (std::size_t i = 0; i < npix; ++i)
        if (grid.mask[i])
            phase[i] = 2.0 * kPi * (0.07 * z5[i] - 0.04 * z12[i]) + 0.3 * z0[i] +
                       0.2 * z1[i] - 0.15 * z2[i];

    double resid = -1.0;
    bool grad_fit = true;
    const WavefrontAberration fit =
        fit_zernike_phase(grid, phase, {5, 12, 13}, &resid, &grad_fit);
    CHECK(fit.get(5) == doctest::Approx(0.07).epsilon(1e-9));
    CHECK(fit.get(12) == doctest::Approx(-0.04).epsilon(1e-9));
    CHECK(std::abs(fit.get(13)) < 1e-9);
    CHECK(resid < 1e-9);
    CHECK_FALSE(grad_fit);  // piston/tip/tilt absorbed, range stays below a wrap
}

TEST_CASE("wrapped phase maps fall back to the neighbor-difference fit") {
    OpticalConfig optics;
    optics.nx = optics.ny = 64;
    const PupilGrid grid = pupil_grid(optics);
    const auto z3 = zernike_map(grid, from_ansi(3));
    std::vector<double> phase(grid.mask.size(), 0.0);
    for (std::size_t i = 0; i < phase.size(); ++i)
        if (grid.mask[i]) {
            const double raw = 2.0 * kPi * 0.35 * z3[i];  // spans > 2π before wrapping
            phase[i] = raw - 2.0 * kPi * std::round(raw / (2.0 * kPi));
        }

    double resid = -1.0;
    bool grad_fit = false;
    const WavefrontAberration fit = fit_zernike_phase(grid, phase, {3, 5}, &resid, &grad_fit);
    CHECK(grad_fit);
    CHECK(fit.get(3) == doctest::Approx(0.35).epsilon(1e-6));
    CHECK(std::abs(fit.get(5)) < 1e-6);
    CHECK(resid < 1e-6);
}

TEST_CASE("phase fitting input validation") {
    OpticalConfig optics;
    optics.nx = optics.ny = 64;
    const PupilGrid grid = pupil_grid(optics);
    const std::vector<double> phase(grid.mask.size(), 0.0);
    CHECK_THROWS_AS(fit_zernike_phase(grid, {0.0, 0.0}, {3}), ShapeError);
    CHECK_THROWS_AS(fit_zernike_phase(grid, phase, {}), ConfigError);
    CHECK_THROWS_AS(fit_zernike_phase(grid, phase, {1}), ConfigError);

    OpticalConfig tiny;
    tiny.nx = tiny.ny = 8;  // 9 aperture pixels cannot support 20 regressors
    const PupilGrid small = pupil_grid(tiny);
    const std::vector<double> small_phase(small.mask.size(), 0.0);
    CHECK_THROWS_AS(fit_zernike_phase(small, small_phase, default_mode_set()), InputError);
}

TEST_CASE("phase retrieval round-trips an astigmatic point source") {
    OpticalConfig optics;  // 64x64x32 default grid
    WavefrontAberration truth;
    truth.set(3, 0.2);
    // The point-source stack is exactly the aberrated diffraction stack.
    ImageStack stack;
    stack.vol = psf_3d(optics, truth).vol;
    stack.pitch = optics.pitch();

    GsConfig cfg;
    cfg.iterations = 200;
    const GsResult res = gerchberg_saxton(stack, optics, cfg);
    // (0.2λ astigmatism sits within 3% of the wrapped-fit threshold, so the
    // fit path is not asserted here; the direct fit tests above pin it.)
    CHECK(std::abs(res.aberration.get(3) - 0.2) < 0.03);
    double worst_other = 0.0;
    for (const auto& [j, a] : res.aberration.coeffs)
        if (j != 3) worst_other = std::max(worst_other, std::abs(a));
    CHECK(worst_other < 0.03);
    CHECK(res.phase.size() == static_cast<std::size_t>(optics.ny) * optics.nx);

    WavefrontAberration mild;
    mild.set(3, 0.05);
    ImageStack mild_stack;
    mild_stack.vol = psf_3d(optics, mild).vol;
    mild_stack.pitch = optics.pitch();
    GsConfig mild_cfg;
    mild_cfg.iterations = 100;
    const GsResult mild_res = gerchberg_saxton(mild_stack, optics, mild_cfg);
    CHECK_FALSE(mild_res.used_gradient_fit);
    CHECK(std::abs(mild_res.aberration.get(3) - 0.05) < 0.02);
}

TEST_CASE("phase retrieval rejects unusable stacks and configs") {
    OpticalConfig optics;
    GsConfig cfg;
    cfg.iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.iterations = 10;
    cfg.modes = {2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    GsConfig ok;
    ImageStack empty;
    empty.vol = Volume(optics.shape(), 0.0);
    empty.pitch = optics.pitch();
    CHECK_THROWS_AS(gerchberg_saxton(empty, optics, ok), InputError);

    ImageStack wrong;
    wrong.vol = Volume({2, 4, 4}, 1.0);
    wrong.pitch = optics.pitch();
    CHECK_THROWS_AS(gerchberg_saxton(wrong, optics, ok), ShapeError);
}

}  // TEST_SUITE
