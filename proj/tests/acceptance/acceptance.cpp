// Acceptance harness: ten numbered end-to-end checks covering gradient
// exactness, synthetic wavefront recovery, the simulated correction loop,
// baseline ordering, sweep cutoff agreement, convolution and metric
// oracles, phase-retrieval round trips, optical-model properties, and
// command-line reproducibility. Each invocation runs one check and prints
// exactly one PASS/FAIL line.
//
// Usage: acceptance <1..10> [cli-binary-path]

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocoa/conv.hpp"
#include "cocoa/correction.hpp"
#include "cocoa/fft.hpp"
#include "cocoa/field.hpp"
#include "cocoa/gs.hpp"
#include "cocoa/metrics.hpp"
#include "cocoa/noise.hpp"
#include "cocoa/optics.hpp"
#include "cocoa/phantom.hpp"
#include "cocoa/rld.hpp"
#include "cocoa/rng.hpp"
#include "cocoa/simulate.hpp"
#include "cocoa/solver.hpp"
#include "cocoa/sweep.hpp"
#include "cocoa/tiff.hpp"
#include "cocoa/types.hpp"
#include "cocoa/zernike.hpp"

namespace {

namespace fs = std::filesystem;
using namespace cocoa;

struct Outcome {
    bool ok = false;
    std::string detail;
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream ss;
    ss.precision(prec);
    ss << v;
    return ss.str();
}

double vmax_of(const Volume& v) {
    double m = 0.0;
    for (double x : v.data) m = std::max(m, std::abs(x));
    return m;
}

// ---------------------------------------------------------- shared scene

struct Scene {
    OpticalConfig optical;
    Structure3D truth;
    SimulationResult sim;
};

Scene bead_scene(int n, int nz, int beads, double photons, const WavefrontAberration& aberration,
                 std::uint64_t seed) {
    Scene sc;
    sc.optical.nx = sc.optical.ny = n;
    sc.optical.nz = nz;
    PhantomSpec ph;
    ph.shape = sc.optical.shape();
    ph.pitch = sc.optical.pitch();
    ph.bead_count = beads;
    ph.seed = mix_seed(seed, 11);
    sc.truth = make_phantom(ph);
    SimulationSpec spec;
    spec.photons_at_peak = photons;
    spec.noise.gain = 2.19;
    spec.noise.readout = 1.6;
    spec.noise.seed = mix_seed(seed, 12);
    sc.sim = simulate_stack(sc.truth, sc.optical, aberration, spec);
    return sc;
}

// -------------------------------------------------------- 1: gradients

// Every partial derivative of the joint loss — all field weights and both
// wavefront coefficients — must match a central finite difference taken at
// step 1e-4 with max relative error below 1e-4 on a 16×16×9 problem.
Outcome criterion1() {
    OpticalConfig optics;
    optics.nx = optics.ny = 16;
    optics.nz = 9;

    TrainConfig train;
    train.modes = {3, 7};
    train.field.hidden = {8};
    train.field.skip_layers = {};
    train.field.encoding.n_radial = 3;
    train.field.encoding.radial_max = 3.0;
    train.field.encoding.n_axial = 2;
    train.field.encoding.axial_max = 2.0;
    train.auto_frequencies = false;

    Volume g(optics.shape());
    Rng rng(3);
    for (double& v : g.data) v = rng.uniform();

    const NeuralField field(train.field, 11);
    const std::vector<double> alpha = {0.03, -0.02};
    const SolverGradients sg = solver_gradients(g, optics, train, field, alpha);

    double gmax = 0.0;
    for (double v : sg.grad_theta) gmax = std::max(gmax, std::abs(v));
    for (double v : sg.grad_alpha) gmax = std::max(gmax, std::abs(v));
    if (!(gmax > 0.0)) return {false, "all analytic gradients are zero"};

    const double h = 1e-4;
    double worst = 0.0;
    auto fd_check = [&](double fd, double an) {
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-3 * gmax});
        worst = std::max(worst, std::abs(fd - an) / denom);
    };

    std::vector<double> theta = field.params();
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double keep = theta[i];
        theta[i] = keep + h;
        const double up = solver_loss(g, optics, train, NeuralField(train.field, theta), alpha)
                              .total;
        theta[i] = keep - h;
        const double dn = solver_loss(g, optics, train, NeuralField(train.field, theta), alpha)
                              .total;
        theta[i] = keep;
        fd_check((up - dn) / (2 * h), sg.grad_theta[i]);
    }
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        std::vector<double> a = alpha;
        a[k] = alpha[k] + h;
        const double up = solver_loss(g, optics, train, field, a).total;
        a[k] = alpha[k] - h;
        const double dn = solver_loss(g, optics, train, field, a).total;
        fd_check((up - dn) / (2 * h), sg.grad_alpha[k]);
    }

    const bool ok = worst < 1e-4;
    return {ok, "max relative gradient error " + fmt(worst, 3) + " over " +
                    std::to_string(field.n_params() + alpha.size()) +
                    " partial derivatives (tolerance 1e-4)"};
}

// ------------------------------------------- 2: single-mode recovery

// A 64×64×32 bead stack carrying 0.15λ of coma at SNR ≥ 10: the joint
// estimation must return the coma coefficient within ±0.03λ, keep every
// other mode below 0.05λ, and land the total wavefront RMS error under
// 0.075λ at a reduced iteration budget (500 joint iterations).
Outcome criterion2() {
    WavefrontAberration injected;
    injected.set(7, 0.15);
    const Scene sc = bead_scene(64, 32, 40, 500.0, injected, 11);

    const SbrResult sb = sbr(sc.sim.stack.vol);
    const double measured_snr = snr(sc.sim.stack.vol, sb.signal_mask, 2.19, 1.6);

    TrainConfig train;
    train.pretrain_iterations = 300;
    train.iterations = 500;
    train.field.hidden = {32, 32, 32, 32};
    train.field.skip_layers = {2};
    train.seed = 11;
    const EstimationResult est = estimate(sc.sim.stack, sc.optical, train);

    const double coma = est.aberration.get(7);
    double max_other = 0.0;
    for (const auto& [j, v] : est.aberration.coeffs)
        if (j != 7) max_other = std::max(max_other, std::abs(v));
    const double rms_err = rms_wavefront_error(est.aberration, injected);

    const bool ok = measured_snr >= 10.0 && std::abs(coma - 0.15) <= 0.03 && max_other < 0.05 &&
                    rms_err < 0.075;
    return {ok, "snr " + fmt(measured_snr, 3) + " (≥10), coma " + fmt(coma, 3) +
                    " (0.15±0.03), max other mode " + fmt(max_other, 3) +
                    " (<0.05), rms error " + fmt(rms_err, 3) + " (<0.075)"};
}

// --------------------------------------------- 3: correction loop

// Three simulated correction rounds starting from a 0.15λ mixed low-order
// aberration: the residual RMS must decrease every round (0.01λ slack) and
// finish below 0.075λ.
Outcome criterion3() {
    OpticalConfig optical;
    optical.nx = optical.ny = 32;
    optical.nz = 16;
    PhantomSpec ph;
    ph.shape = optical.shape();
    ph.pitch = optical.pitch();
    ph.bead_count = 12;
    ph.seed = mix_seed(9, 11);
    const Structure3D truth = make_phantom(ph);

    Rng rng(mix_seed(9, 17));
    const WavefrontAberration initial = random_mixed_aberration(0.15, low_order_modes(), rng);

    CorrectionConfig cfg;
    cfg.rounds = 3;
    cfg.sim.photons_at_peak = 500.0;
    cfg.sim.noise.gain = 2.19;
    cfg.sim.noise.readout = 1.6;
    cfg.sim.noise.seed = mix_seed(9, 12);
    cfg.train.pretrain_iterations = 300;
    cfg.train.iterations = 1000;
    cfg.train.field.hidden = {32, 32, 32, 32};
    cfg.train.field.skip_layers = {2};
    cfg.train.seed = 9;

    const std::vector<CorrectionRound> rounds = iterative_correction(truth, optical, initial, cfg);

    std::string residuals;
    bool monotone = true;
    double prev = initial.rms();
    for (const CorrectionRound& r : rounds) {
        if (!(r.residual_rms < prev + 0.01)) monotone = false;
        prev = r.residual_rms;
        residuals += (residuals.empty() ? "" : " ") + fmt(r.residual_rms, 3);
    }
    const double final_rms = rounds.back().residual_rms;
    const bool ok = monotone && final_rms < 0.075;
    return {ok, "residual rms per round: " + residuals + " from " + fmt(initial.rms(), 3) +
                    " (each round −0.01 slack, final <0.075)"};
}

// --------------------------------------------- 4: baseline ordering

// On the same aberrated noisy scene, deconvolution with the true kernel
// must beat blind deconvolution by ≥0.02 PCC, and the joint estimation
// must match or beat blind deconvolution. The aberration must be strong
// enough that the blind branch's unaberrated starting kernel is genuinely
// wrong (at mild aberrations the two deconvolutions tie).
Outcome criterion4() {
    WavefrontAberration injected;
    injected.set(7, 0.25);
    const Scene sc = bead_scene(32, 16, 12, 2000.0, injected, 7);

    RlConfig rl;
    rl.iterations = 25;
    const Volume nonblind = richardson_lucy(sc.sim.stack.vol, psf_3d(sc.optical, injected).vol, rl);

    BlindRlConfig blind_cfg;
    blind_cfg.alternations = 25;
    blind_cfg.final_iterations = 25;
    const BlindRlResult blind =
        blind_richardson_lucy(sc.sim.stack.vol, psf_3d(sc.optical, {}).vol, blind_cfg);

    TrainConfig train;
    train.pretrain_iterations = 300;
    train.iterations = 1000;
    train.field.hidden = {32, 32, 32, 32};
    train.field.skip_layers = {2};
    train.seed = 7;
    const EstimationResult est = estimate(sc.sim.stack, sc.optical, train);

    const double p_nonblind = pcc(nonblind, sc.truth.vol);
    const double p_blind = pcc(blind.image, sc.truth.vol);
    const double p_joint = pcc(est.structure.vol, sc.truth.vol);

    const bool ok = p_nonblind >= p_blind + 0.02 && p_joint >= p_blind;
    return {ok, "pcc: true-kernel deconvolution " + fmt(p_nonblind, 3) + ", blind " +
                    fmt(p_blind, 3) + ", joint estimation " + fmt(p_joint, 3) +
                    " (need nonblind ≥ blind+0.02 and joint ≥ blind)"};
}

// ------------------------------------------------ 5: sweep cutoffs

// An illumination sweep on a fixed 0.15λ coma scenario: the two-segment
// fits on the PCC and EMD curves must place their breakpoints within 0.05
// of each other in normalized sweep units, and mean PCC above the cutoff
// must exceed mean PCC below it by ≥0.2.
Outcome criterion5() {
    SweepSpec spec;
    spec.variable = "snr";
    spec.values = {3.0, 8.0, 20.0, 60.0, 150.0, 400.0};
    spec.repeats = 2;
    spec.modes = "fixed";
    spec.fixed_mode = 7;
    spec.fixed_rms = 0.15;

    OpticalConfig optical;
    optical.nx = optical.ny = 32;
    optical.nz = 16;
    PhantomSpec ph;
    ph.shape = optical.shape();
    ph.pitch = optical.pitch();
    ph.bead_count = 12;
    ph.seed = mix_seed(13, 11);
    NoiseModel noise;
    noise.gain = 2.19;
    noise.readout = 1.6;

    TrainConfig train;
    train.pretrain_iterations = 100;
    train.iterations = 250;
    train.field.hidden = {16, 16, 16, 16};
    train.field.skip_layers = {2};

    const SweepResult res = run_sweep(spec, ph, optical, noise, train, 13);
    if (!res.pcc_fit || !res.emd_fit) return {false, "sweep produced no cutoff fits"};

    const double x0 = spec.values.front(), x1 = spec.values.back();
    const double bn_pcc = (res.pcc_fit->breakpoint - x0) / (x1 - x0);
    const double bn_emd = (res.emd_fit->breakpoint - x0) / (x1 - x0);

    double above = 0.0, below = 0.0;
    int n_above = 0, n_below = 0;
    for (std::size_t i = 0; i < res.xs_used.size(); ++i) {
        if (res.xs_used[i] > res.pcc_fit->breakpoint) {
            above += res.pcc_mean[i];
            ++n_above;
        } else {
            below += res.pcc_mean[i];
            ++n_below;
        }
    }
    if (n_above == 0 || n_below == 0) return {false, "breakpoint does not split the sweep"};
    above /= n_above;
    below /= n_below;

    const bool ok = std::isfinite(res.pcc_fit->breakpoint) &&
                    std::abs(bn_pcc - bn_emd) <= 0.05 && above - below >= 0.2;
    return {ok, "normalized breakpoints pcc " + fmt(bn_pcc, 3) + " / emd " + fmt(bn_emd, 3) +
                    " (|Δ|≤0.05), mean pcc above−below " + fmt(above - below, 3) + " (≥0.2)"};
}

// --------------------------------------------- 6: convolution oracle

Volume direct_convolve(const Volume& s, const Volume& h, Shape3 out) {
    const ConvGeometry geo = ConvGeometry::make(s.shape, h.shape, out);
    const Shape3 full{s.shape.nz + h.shape.nz - 1, s.shape.ny + h.shape.ny - 1,
                      s.shape.nx + h.shape.nx - 1};
    Volume acc(full);
    for (int sz = 0; sz < s.shape.nz; ++sz)
        for (int sy = 0; sy < s.shape.ny; ++sy)
            for (int sx = 0; sx < s.shape.nx; ++sx) {
                const double sv = s.at(sz, sy, sx);
                for (int hz = 0; hz < h.shape.nz; ++hz)
                    for (int hy = 0; hy < h.shape.ny; ++hy)
                        for (int hx = 0; hx < h.shape.nx; ++hx)
                            acc.at(sz + hz, sy + hy, sx + hx) += sv * h.at(hz, hy, hx);
            }
    Volume res(out);
    for (int z = 0; z < out.nz; ++z)
        for (int y = 0; y < out.ny; ++y)
            for (int x = 0; x < out.nx; ++x) res.at(z, y, x) = acc.at(z + geo.cz, y + geo.cy, x + geo.cx);
    return res;
}

double dot(const Volume& a, const Volume& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

Volume random_volume(Shape3 shape, Rng& rng) {
    Volume v(shape);
    for (double& x : v.data) x = rng.uniform(-1.0, 1.0);
    return v;
}

// FFT convolution must equal the direct sum on random 5×5×3 ⊛ 3×3×3
// instances within 1e-10 relative error, and both adjoints must satisfy
// the inner-product identity within 1e-8.
Outcome criterion6() {
    double worst_fwd = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const Volume s = random_volume({3, 5, 5}, rng);
        const Volume h = random_volume({3, 3, 3}, rng);
        const Volume fftc = convolve_3d(s, h, s.shape);
        const Volume ref = direct_convolve(s, h, s.shape);
        const double scale = vmax_of(ref);
        for (std::size_t i = 0; i < ref.data.size(); ++i)
            worst_fwd = std::max(worst_fwd, std::abs(fftc.data[i] - ref.data[i]) / scale);
    }

    double worst_adj = 0.0;
    for (std::uint64_t seed = 31; seed <= 40; ++seed) {
        Rng rng(seed);
        const Shape3 s_shape{5, 7, 6}, h_shape{3, 4, 3}, out{3, 5, 4};
        const Volume x = random_volume(s_shape, rng);
        const Volume h = random_volume(h_shape, rng);
        const Volume y = random_volume(out, rng);

        const double lhs = dot(convolve_3d(x, h, out), y);
        const double rhs_s = dot(x, convolve_adjoint_structure(y, h, s_shape));
        worst_adj = std::max(worst_adj, std::abs(lhs - rhs_s) / std::max(1.0, std::abs(lhs)));

        const Volume k = random_volume(h_shape, rng);
        const double lhs_h = dot(convolve_3d(x, k, out), y);
        const double rhs_h = dot(k, convolve_adjoint_psf(y, x, h_shape));
        worst_adj = std::max(worst_adj, std::abs(lhs_h - rhs_h) / std::max(1.0, std::abs(lhs_h)));
    }

    const bool ok = worst_fwd < 1e-10 && worst_adj < 1e-8;
    return {ok, "direct-sum agreement " + fmt(worst_fwd, 3) + " (<1e-10), adjoint identity " +
                    fmt(worst_adj, 3) + " (<1e-8)"};
}

// ----------------------------------------------- 7: metric oracles

Outcome criterion7() {
    std::vector<std::string> fails;

    // Self-similarity identities.
    {
        Volume a({3, 8, 8});
        Rng rng(21);
        for (double& v : a.data) v = rng.uniform(0.0, 5.0);
        if (std::abs(pcc(a, a) - 1.0) > 1e-12) fails.push_back("pcc(x,x)≠1");
        if (emd_sliced(a, a, {0.25, 0.1, 0.1}, 200, 2, 5) > 1e-12)
            fails.push_back("emd(x,x)≠0");
    }

    // A single point mass displaced by v has sliced distance |v|/√3.
    {
        Volume a({4, 8, 8}), b({4, 8, 8});
        a.at(1, 2, 3) = 1.0;
        b.at(3, 6, 6) = 1.0;
        const double expect = std::sqrt(0.5 * 0.5 + 0.4 * 0.4 + 0.3 * 0.3) / std::sqrt(3.0);
        const double got = emd_sliced(a, b, {0.25, 0.1, 0.1}, 200, 2, 5);
        if (std::abs(got - expect) > 0.05 * expect)
            fails.push_back("point-mass emd " + fmt(got, 4) + " vs " + fmt(expect, 4));
    }

    // Photon-budget SNR arithmetic.
    {
        Volume s({1, 4, 4});
        for (double& v : s.data) v = 109.5;  // 50 photons at gain 2.19
        std::vector<std::uint8_t> mask(16, 0);
        mask[0] = mask[5] = mask[9] = 1;
        const double got = snr(s, mask, 2.19, 3.0);
        const double expect = 50.0 / std::sqrt(50.0 + (3.0 / 2.19) * (3.0 / 2.19));
        if (std::abs(got - expect) > 1e-12) fails.push_back("snr arithmetic");

        Volume shot({1, 4, 4});
        for (double& v : shot.data) v = 50.0;
        std::vector<std::uint8_t> all(16, 1);
        if (std::abs(snr(shot, all, 1.0, 0.0) - std::sqrt(50.0)) > 1e-12)
            fails.push_back("shot-noise limit");
    }

    // SBR on a two-level synthetic with a true ratio of 2.0. The denoise
    // blur must stay below the box width (else the smeared shell dilutes
    // the signal mean) and the broad blur above it (else the subtraction
    // removes the box itself).
    {
        Volume v({16, 48, 48});
        Rng rng(8);
        for (double& x : v.data) x = 10.0 + rng.uniform(-0.2, 0.2);
        for (int z = 4; z < 12; ++z)
            for (int y = 12; y < 36; ++y)
                for (int x = 12; x < 36; ++x) v.at(z, y, x) = 20.0 + rng.uniform(-0.2, 0.2);
        SbrConfig cfg;
        cfg.lowpass_sigma = 0.5;
        cfg.highpass_sigma = 40.0;
        const double got = sbr(v, cfg).sbr;
        if (std::abs(got - 2.0) > 0.2) fails.push_back("two-level sbr " + fmt(got, 4));
    }

    // Gain calibration from temporal photon-transfer statistics.
    {
        const int frames = 96, n = 48;
        Volume expected({frames, n, n});
        for (int f = 0; f < frames; ++f)
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    expected.at(f, y, x) = 30.0 + 370.0 * x / (n - 1.0);
        NoiseModel model;
        model.gain = 2.19;
        model.readout = 0.0;
        model.seed = 3;
        const ImageStack noisy = apply_noise(expected, {0.25, 0.1, 0.1}, model);
        const double beta = camera_gain(noisy.vol);
        if (std::abs(beta - 2.19) > 0.05) fails.push_back("gain " + fmt(beta, 4));
    }

    if (fails.empty())
        return {true,
                "pcc/emd identities, point-mass transport, snr arithmetic, two-level sbr, and "
                "gain calibration all within stated tolerances"};
    std::string msg = "failed:";
    for (const std::string& f : fails) msg += " [" + f + "]";
    return {false, msg};
}

// ------------------------------------------- 8: phase retrieval

// A noiseless bead stack carrying 0.2λ of oblique astigmatism: the
// propagation-based phase retrieval must recover the coefficient within
// ±0.03λ and keep all other modes below 0.03λ.
Outcome criterion8() {
    OpticalConfig optical;
    optical.nx = optical.ny = 32;
    optical.nz = 16;
    WavefrontAberration injected;
    injected.set(3, 0.2);

    ImageStack stack;
    stack.vol = psf_3d(optical, injected).vol;
    stack.pitch = optical.pitch();

    GsConfig cfg;
    cfg.iterations = 200;
    const GsResult result = gerchberg_saxton(stack, optical, cfg);

    const double got = result.aberration.get(3);
    double max_other = 0.0;
    for (const auto& [j, v] : result.aberration.coeffs)
        if (j != 3) max_other = std::max(max_other, std::abs(v));

    const bool ok = std::abs(got - 0.2) <= 0.03 && max_other < 0.03;
    return {ok, "recovered astigmatism " + fmt(got, 3) + " (0.2±0.03), max other mode " +
                    fmt(max_other, 3) + " (<0.03)"};
}

// ------------------------------------------- 9: optics properties

Outcome criterion9() {
    std::vector<std::string> fails;

    // 17-mode Gram matrix on a 512² disk sampling ≈ identity.
    {
        const PupilGrid grid = unit_disk_grid(512);
        const std::vector<int> modes = default_mode_set();
        std::vector<std::vector<double>> maps;
        maps.reserve(modes.size());
        for (int j : modes) maps.push_back(zernike_map(grid, from_ansi(j)));
        double off = 0.0, diag_err = 0.0;
        for (std::size_t a = 0; a < maps.size(); ++a)
            for (std::size_t b = a; b < maps.size(); ++b) {
                double g = 0.0;
                for (std::size_t i = 0; i < maps[a].size(); ++i) g += maps[a][i] * maps[b][i];
                g /= grid.mask_count;
                if (a == b)
                    diag_err = std::max(diag_err, std::abs(g - 1.0));
                else
                    off = std::max(off, std::abs(g));
            }
        if (off >= 1e-3) fails.push_back("gram off-diagonal " + fmt(off, 3));
        if (diag_err >= 1e-2) fails.push_back("gram diagonal error " + fmt(diag_err, 3));
    }

    // The unaberrated kernel is symmetric about the focal plane.
    OpticalConfig optical;  // 64×64×32 defaults
    const Psf3D psf = psf_3d(optical, {});
    {
        const double peak = vmax_of(psf.vol);
        double asym = 0.0;
        const int f = psf.focal_plane;
        for (int d = 1; f - d >= 0 && f + d < optical.nz; ++d)
            for (int y = 0; y < optical.ny; ++y)
                for (int x = 0; x < optical.nx; ++x)
                    asym = std::max(asym, std::abs(psf.vol.at(f + d, y, x) -
                                                   psf.vol.at(f - d, y, x)));
        if (asym / peak >= 1e-6) fails.push_back("z-asymmetry " + fmt(asym / peak, 3));
    }

    // The focal-plane transfer function vanishes beyond 2NA/λ (plus one
    // frequency sample of slack).
    {
        const int n = optical.nx;
        std::vector<std::complex<double>> in(static_cast<std::size_t>(n) * n), out(in.size());
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) in[y * n + x] = psf.vol.at(psf.focal_plane, y, x);
        fft::forward2d(n, n, in.data(), out.data());
        const double dc = std::abs(out[0]);
        const double df = 1.0 / (n * optical.lateral_pixel);
        const double f_cut = 2.0 * optical.numerical_aperture / optical.wavelength + df;
        double leak = 0.0;
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const double fy = (y < (n + 1) / 2 ? y : y - n) * df;
                const double fx = (x < (n + 1) / 2 ? x : x - n) * df;
                if (std::hypot(fx, fy) > f_cut) leak = std::max(leak, std::abs(out[y * n + x]));
            }
        if (leak / dc >= 1e-8) fails.push_back("otf leak " + fmt(leak / dc, 3));
    }

    if (fails.empty())
        return {true,
                "gram ≈ identity at 512² (off-diagonal <1e-3), focal symmetry <1e-6, transfer "
                "support within 2NA/λ + one sample"};
    std::string msg = "failed:";
    for (const std::string& f : fails) msg += " [" + f + "]";
    return {false, msg};
}

// ------------------------------------- 10: command-line reproducibility

int run_cmd(const std::string& cmd) {
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    if (status == -1) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Outcome criterion10(const std::string& cli) {
    if (cli.empty()) return {false, "command-line binary path missing (pass it as argv[2])"};

    const fs::path root = fs::temp_directory_path() / ("cocoa_accept10_" + std::to_string(::getpid()));
    fs::create_directories(root);
    struct Cleanup {
        fs::path p;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(p, ec);
        }
    } cleanup{root};

    using nlohmann::json;
    const json sim_cfg = {{"optical", {{"nx", 16}, {"ny", 16}, {"nz", 8}}},
                          {"phantom", {{"bead_count", 3}, {"brightness", 5.0}}},
                          {"noise", {{"gain", 2.19}, {"readout", 1.6}}},
                          {"simulate", {{"photons_at_peak", 150.0}}},
                          {"aberration", {{"7", 0.1}}}};
    {
        std::ofstream f(root / "sim.json");
        f << sim_cfg.dump(2) << "\n";
    }
    const fs::path sim_out = root / "sim";
    if (run_cmd("\"" + cli + "\" simulate --config " + (root / "sim.json").string() +
                " --seed 21 --threads 1 --out " + sim_out.string()) != 0)
        return {false, "simulation command failed"};

    const json est_cfg = {{"io", {{"stack", (sim_out / "stack.tif").string()}}},
                          {"train",
                           {{"pretrain_iterations", 5},
                            {"iterations", 10},
                            {"modes", json::array({3, 7})},
                            {"hidden", json::array({8})},
                            {"skip_layers", json::array()}}}};
    {
        std::ofstream f(root / "est.json");
        f << est_cfg.dump(2) << "\n";
    }
    for (const char* run : {"e1", "e2"}) {
        if (run_cmd("\"" + cli + "\" estimate --config " + (root / "est.json").string() +
                    " --seed 21 --threads 1 --out " + (root / run).string()) != 0)
            return {false, std::string("estimation run ") + run + " failed"};
    }

    const bool ab_same =
        file_bytes(root / "e1" / "aberration.json") == file_bytes(root / "e2" / "aberration.json");
    const bool vol_same =
        file_bytes(root / "e1" / "structure.tif") == file_bytes(root / "e2" / "structure.tif");
    const bool nonempty = !file_bytes(root / "e1" / "aberration.json").empty() &&
                          !file_bytes(root / "e1" / "structure.tif").empty();

    const bool ok = ab_same && vol_same && nonempty;
    return {ok, std::string("rerun artifacts ") +
                    (ok ? "byte-identical (aberration JSON and structure TIFF)"
                        : (std::string(ab_same ? "" : "[aberration differs] ") +
                           (vol_same ? "" : "[structure differs] ") +
                           (nonempty ? "" : "[artifacts empty]")))};
}

const char* kNames[] = {
    "exact gradients",        "single-mode wavefront recovery", "iterative correction loop",
    "baseline ordering",      "illumination sweep cutoffs",     "convolution oracle",
    "metric oracles",         "phase-retrieval round trip",     "optical-model properties",
    "command-line reproducibility",
};

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <1..10> [cli-binary-path]\n");
        return 2;
    }
    const int num = std::atoi(argv[1]);
    if (num < 1 || num > 10) {
        std::fprintf(stderr, "criterion number must be 1..10\n");
        return 2;
    }
    const std::string cli = argc > 2 ? argv[2] : "";

    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
        switch (num) {
            case 1: r = criterion1(); break;
            case 2: r = criterion2(); break;
            case 3: r = criterion3(); break;
            case 4: r = criterion4(); break;
            case 5: r = criterion5(); break;
            case 6: r = criterion6(); break;
            case 7: r = criterion7(); break;
            case 8: r = criterion8(); break;
            case 9: r = criterion9(); break;
            case 10: r = criterion10(cli); break;
        }
    } catch (const std::exception& e) {
        r.ok = false;
        r.detail = std::string("unexpected exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::printf("%s: criterion %d (%s) — %s [%.1fs]\n", r.ok ? "PASS" : "FAIL", num,
                kNames[num - 1], r.detail.c_str(), secs);
    return r.ok ? 0 : 1;
}
