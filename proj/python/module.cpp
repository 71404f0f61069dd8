// Python bindings: numpy-centric access to the PSF model, synthetic
// scenes, the camera simulation, joint wavefront/structure estimation,
// deconvolution baselines, phase retrieval, and the evaluation metrics.
//
// Conventions: volumes are float64 numpy arrays in (z, y, x) order;
// aberrations are {ANSI index: coefficient in λ} dicts; pitches are
// (dz, dy, dx) tuples in micrometers.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "cocoa/conv.hpp"
#include "cocoa/gs.hpp"
#include "cocoa/metrics.hpp"
#include "cocoa/noise.hpp"
#include "cocoa/optics.hpp"
#include "cocoa/phantom.hpp"
#include "cocoa/rld.hpp"
#include "cocoa/simulate.hpp"
#include "cocoa/solver.hpp"
#include "cocoa/types.hpp"
#include "cocoa/zernike.hpp"

namespace py = pybind11;
using namespace cocoa;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Volume to_volume(const DoubleArray& arr, const char* what) {
    if (arr.ndim() != 3)
        throw py::value_error(std::string(what) + " must be a 3-D array in (z, y, x) order");
    Volume v({static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
              static_cast<int>(arr.shape(2))});
    std::memcpy(v.data.data(), arr.data(), v.data.size() * sizeof(double));
    return v;
}

py::array_t<double> from_volume(const Volume& v) {
    py::array_t<double> out({v.shape.nz, v.shape.ny, v.shape.nx});
    std::memcpy(out.mutable_data(), v.data.data(), v.data.size() * sizeof(double));
    return out;
}

WavefrontAberration to_aberration(const py::dict& d) {
    WavefrontAberration a;
    for (const auto& item : d) {
        const int j = py::cast<int>(item.first);
        a.set(j, py::cast<double>(item.second));
    }
    return a;
}

py::dict from_aberration(const WavefrontAberration& a) {
    py::dict d;
    for (const auto& [j, v] : a.coeffs) d[py::int_(j)] = v;
    return d;
}

Pitches to_pitches(const py::tuple& t) {
    if (t.size() != 3) throw py::value_error("pitch must be a (dz, dy, dx) tuple");
    return {py::cast<double>(t[0]), py::cast<double>(t[1]), py::cast<double>(t[2])};
}

OpticalConfig make_optical(Shape3 shape, double numerical_aperture, double wavelength,
                           double refractive_index, double lateral_pixel, double axial_step) {
    OpticalConfig cfg;
    cfg.nz = shape.nz;
    cfg.ny = shape.ny;
    cfg.nx = shape.nx;
    cfg.numerical_aperture = numerical_aperture;
    cfg.wavelength = wavelength;
    cfg.refractive_index = refractive_index;
    cfg.lateral_pixel = lateral_pixel;
    cfg.axial_step = axial_step;
    cfg.validate();
    return cfg;
}

constexpr const char* kOpticalArgsDoc =
    "numerical_aperture, wavelength, refractive_index, lateral_pixel and axial_step "
    "describe the widefield microscope (micrometer units).";

}  // namespace

PYBIND11_MODULE(_cocoa, m) {
    m.doc() =
        "Joint wavefront and 3-D structure recovery from a single widefield stack: "
        "PSF model, simulation, neural-field estimation, baselines, and metrics.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<GenerationError>(m, "GenerationError", PyExc_RuntimeError);

    // ------------------------------------------------------------- modes

    m.def("default_modes", &default_mode_set,
          "ANSI indices of the 17-mode estimation basis (orders 2-5, no defocus).");
    m.def("low_order_modes", &low_order_modes, "ANSI indices of orders 2-4 (no defocus).");
    m.def("high_order_modes", &high_order_modes, "ANSI indices of order 5.");
    m.def(
        "aberration_rms",
        [](const py::dict& aberration) { return to_aberration(aberration).rms(); },
        py::arg("aberration"), "l2 norm of the coefficient dict (orthonormal basis, λ units).");
    m.def(
        "rms_wavefront_error",
        [](const py::dict& a, const py::dict& b) {
            return rms_wavefront_error(to_aberration(a), to_aberration(b));
        },
        py::arg("a"), py::arg("b"),
        "l2 norm of coefficient differences over the union of modes (λ units).");

    // --------------------------------------------------------------- psf

    m.def(
        "psf",
        [](const py::dict& aberration, int nx, int ny, int nz, double numerical_aperture,
           double wavelength, double refractive_index, double lateral_pixel, double axial_step) {
            const OpticalConfig cfg = make_optical({nz, ny, nx}, numerical_aperture, wavelength,
                                                   refractive_index, lateral_pixel, axial_step);
            return from_volume(psf_3d(cfg, to_aberration(aberration)).vol);
        },
        py::arg("aberration") = py::dict(), py::arg("nx") = 64, py::arg("ny") = 64,
        py::arg("nz") = 32, py::arg("numerical_aperture") = 1.1, py::arg("wavelength") = 0.51,
        py::arg("refractive_index") = 1.33, py::arg("lateral_pixel") = 0.1,
        py::arg("axial_step") = 0.25,
        (std::string("Unit-sum 3-D PSF (focal plane at nz//2) under the given aberration. ") +
         kOpticalArgsDoc)
            .c_str());

    // ------------------------------------------------------------ scenes

    m.def(
        "bead_phantom",
        [](int nx, int ny, int nz, int count, double radius, double brightness,
           const py::tuple& pitch, std::uint64_t seed) {
            PhantomSpec spec;
            spec.kind = PhantomSpec::Kind::beads;
            spec.shape = {nz, ny, nx};
            spec.pitch = to_pitches(pitch);
            spec.bead_count = count;
            spec.bead_radius = radius;
            spec.brightness = brightness;
            spec.seed = seed;
            return from_volume(make_phantom(spec).vol);
        },
        py::arg("nx") = 64, py::arg("ny") = 64, py::arg("nz") = 32, py::arg("count") = 12,
        py::arg("radius") = 0.25, py::arg("brightness") = 1.0,
        py::arg("pitch") = py::make_tuple(0.25, 0.1, 0.1), py::arg("seed") = 0,
        "Random bead volume (bead radius in micrometers).");

    m.def(
        "filament_phantom",
        [](int nx, int ny, int nz, int count, double radius, double brightness,
           const py::tuple& pitch, std::uint64_t seed) {
            PhantomSpec spec;
            spec.kind = PhantomSpec::Kind::filaments;
            spec.shape = {nz, ny, nx};
            spec.pitch = to_pitches(pitch);
            spec.filament_count = count;
            spec.filament_radius = radius;
            spec.brightness = brightness;
            spec.seed = seed;
            return from_volume(make_phantom(spec).vol);
        },
        py::arg("nx") = 64, py::arg("ny") = 64, py::arg("nz") = 32, py::arg("count") = 3,
        py::arg("radius") = 0.35, py::arg("brightness") = 1.0,
        py::arg("pitch") = py::make_tuple(0.25, 0.1, 0.1), py::arg("seed") = 0,
        "Random filament volume (tube radius in micrometers).");

    m.def(
        "simulate",
        [](const DoubleArray& truth, const py::dict& aberration, double photons_at_peak,
           double gain, double readout, std::uint64_t seed, double numerical_aperture,
           double wavelength, double refractive_index, double lateral_pixel, double axial_step) {
            const Volume t = to_volume(truth, "truth");
            const OpticalConfig cfg = make_optical(t.shape, numerical_aperture, wavelength,
                                                   refractive_index, lateral_pixel, axial_step);
            Structure3D structure{t, cfg.pitch()};
            SimulationSpec spec;
            spec.photons_at_peak = photons_at_peak;
            spec.noise.gain = gain;
            spec.noise.readout = readout;
            spec.noise.seed = seed;
            const SimulationResult res = simulate_stack(structure, cfg, to_aberration(aberration),
                                                        spec);
            py::dict out;
            out["stack"] = from_volume(res.stack.vol);
            out["clean"] = from_volume(res.clean);
            out["psf"] = from_volume(res.psf.vol);
            return out;
        },
        py::arg("truth"), py::arg("aberration") = py::dict(), py::arg("photons_at_peak") = 200.0,
        py::arg("gain") = 2.19, py::arg("readout") = 1.6, py::arg("seed") = 0,
        py::arg("numerical_aperture") = 1.1, py::arg("wavelength") = 0.51,
        py::arg("refractive_index") = 1.33, py::arg("lateral_pixel") = 0.1,
        py::arg("axial_step") = 0.25,
        "Image a structure through the aberrated PSF with Poisson+readout camera noise; "
        "returns {'stack', 'clean', 'psf'}.");

    // --------------------------------------------------------- estimation

    m.def(
        "estimate",
        [](const DoubleArray& stack, double gain, double readout, int pretrain_iterations,
           int iterations, double lr_pretrain, double lr_structure, double lr_zernike,
           double tv_weight, double l1_weight, double alpha_init, const std::vector<int>& modes,
           const std::vector<int>& hidden, const std::vector<int>& skip_layers,
           std::uint64_t seed, double numerical_aperture, double wavelength,
           double refractive_index, double lateral_pixel, double axial_step) {
            const Volume g = to_volume(stack, "stack");
            const OpticalConfig cfg = make_optical(g.shape, numerical_aperture, wavelength,
                                                   refractive_index, lateral_pixel, axial_step);
            ImageStack image{g, cfg.pitch(), gain, readout};
            TrainConfig train;
            train.pretrain_iterations = pretrain_iterations;
            train.iterations = iterations;
            train.lr_pretrain = lr_pretrain;
            train.lr_structure = lr_structure;
            train.lr_zernike = lr_zernike;
            train.weights.tv = tv_weight;
            train.weights.l1 = l1_weight;
            train.alpha_init = alpha_init;
            train.modes = modes;
            if (!hidden.empty()) train.field.hidden = hidden;
            train.field.skip_layers = skip_layers;
            train.seed = seed;

            EstimationResult res;
            {
                py::gil_scoped_release release;
                res = estimate(image, cfg, train);
            }
            py::dict out;
            out["aberration"] = from_aberration(res.aberration);
            out["structure"] = from_volume(res.structure.vol);
            py::list loss;
            for (const LossBreakdown& lb : res.trace) loss.append(lb.total);
            out["loss_trace"] = loss;
            return out;
        },
        py::arg("stack"), py::arg("gain") = 1.0, py::arg("readout") = 0.0,
        py::arg("pretrain_iterations") = 400, py::arg("iterations") = 2000,
        py::arg("lr_pretrain") = 1e-2, py::arg("lr_structure") = 5e-3,
        py::arg("lr_zernike") = 1e-2, py::arg("tv_weight") = 1e-3, py::arg("l1_weight") = 1e-4,
        py::arg("alpha_init") = 0.05, py::arg("modes") = std::vector<int>{},
        py::arg("hidden") = std::vector<int>{}, py::arg("skip_layers") = std::vector<int>{4},
        py::arg("seed") = 0, py::arg("numerical_aperture") = 1.1, py::arg("wavelength") = 0.51,
        py::arg("refractive_index") = 1.33, py::arg("lateral_pixel") = 0.1,
        py::arg("axial_step") = 0.25,
        "Self-supervised joint recovery of the Zernike aberration and the 3-D structure from "
        "one stack; returns {'aberration', 'structure', 'loss_trace'}. Empty modes selects the "
        "17-mode default basis; empty hidden keeps the 8x128 default field.");

    // ---------------------------------------------------------- baselines

    m.def(
        "richardson_lucy",
        [](const DoubleArray& image, const DoubleArray& psf, int iterations) {
            RlConfig cfg;
            cfg.iterations = iterations;
            return from_volume(
                richardson_lucy(to_volume(image, "image"), to_volume(psf, "psf"), cfg));
        },
        py::arg("image"), py::arg("psf"), py::arg("iterations") = 100,
        "Non-blind Richardson-Lucy deconvolution with a known PSF.");

    m.def(
        "blind_richardson_lucy",
        [](const DoubleArray& image, const DoubleArray& psf_init, int alternations,
           int final_iterations) {
            BlindRlConfig cfg;
            cfg.alternations = alternations;
            cfg.final_iterations = final_iterations;
            const BlindRlResult res = blind_richardson_lucy(
                to_volume(image, "image"), to_volume(psf_init, "psf_init"), cfg);
            py::dict out;
            out["image"] = from_volume(res.image);
            out["psf"] = from_volume(res.psf);
            return out;
        },
        py::arg("image"), py::arg("psf_init"), py::arg("alternations") = 100,
        py::arg("final_iterations") = 100,
        "Blind Richardson-Lucy: alternating image/PSF updates from psf_init (same shape as the "
        "image), then a fresh non-blind pass; returns {'image', 'psf'}.");

    m.def(
        "gerchberg_saxton",
        [](const DoubleArray& stack, int iterations, const std::vector<int>& modes,
           double numerical_aperture, double wavelength, double refractive_index,
           double lateral_pixel, double axial_step) {
            const Volume g = to_volume(stack, "stack");
            const OpticalConfig cfg = make_optical(g.shape, numerical_aperture, wavelength,
                                                   refractive_index, lateral_pixel, axial_step);
            ImageStack image{g, cfg.pitch()};
            GsConfig gs;
            gs.iterations = iterations;
            gs.modes = modes;
            const GsResult res = gerchberg_saxton(image, cfg, gs);
            py::dict out;
            out["aberration"] = from_aberration(res.aberration);
            out["fit_rms_residual"] = res.fit_rms_residual;
            return out;
        },
        py::arg("stack"), py::arg("iterations") = 100, py::arg("modes") = std::vector<int>{},
        py::arg("numerical_aperture") = 1.1, py::arg("wavelength") = 0.51,
        py::arg("refractive_index") = 1.33, py::arg("lateral_pixel") = 0.1,
        py::arg("axial_step") = 0.25,
        "Multi-plane phase retrieval from a bead stack; returns {'aberration', "
        "'fit_rms_residual'}.");

    // -------------------------------------------------------- convolution

    m.def(
        "convolve",
        [](const DoubleArray& structure, const DoubleArray& kernel) {
            const Volume s = to_volume(structure, "structure");
            return from_volume(convolve_3d(s, to_volume(kernel, "kernel"), s.shape));
        },
        py::arg("structure"), py::arg("kernel"),
        "FFT linear convolution cropped back to the structure's shape (centered kernel).");

    // ------------------------------------------------------------ metrics

    m.def(
        "pcc",
        [](const DoubleArray& a, const DoubleArray& b) {
            return pcc(to_volume(a, "a"), to_volume(b, "b"));
        },
        py::arg("a"), py::arg("b"), "Pearson correlation coefficient between two volumes.");

    m.def(
        "emd",
        [](const DoubleArray& a, const DoubleArray& b, const py::tuple& pitch, int projections,
           int p, std::uint64_t seed) {
            return emd_sliced(to_volume(a, "a"), to_volume(b, "b"), to_pitches(pitch),
                              projections, p, seed);
        },
        py::arg("a"), py::arg("b"), py::arg("pitch") = py::make_tuple(0.25, 0.1, 0.1),
        py::arg("projections") = 200, py::arg("p") = 2, py::arg("seed") = 0,
        "Sliced Wasserstein distance between intensity distributions (micrometers).");

    m.def(
        "sbr",
        [](const DoubleArray& stack) {
            const SbrResult res = sbr(to_volume(stack, "stack"));
            py::dict out;
            out["sbr"] = res.sbr;
            out["converged"] = res.converged;
            return out;
        },
        py::arg("stack"),
        "Signal-to-background ratio via a two-component mixture fit; returns {'sbr', "
        "'converged'}.");

    m.def(
        "snr",
        [](const DoubleArray& stack, double gain, double readout) {
            const Volume v = to_volume(stack, "stack");
            const SbrResult res = sbr(v);
            return snr(v, res.signal_mask, gain, readout);
        },
        py::arg("stack"), py::arg("gain") = 1.0, py::arg("readout") = 0.0,
        "Photon-budget SNR over the mixture-classified signal voxels.");

    m.def(
        "contrast",
        [](const DoubleArray& stack) {
            return image_contrast(mip_z(to_volume(stack, "stack")));
        },
        py::arg("stack"), "p99/p1 contrast of the lateral maximum-intensity projection.");

    m.def(
        "camera_gain",
        [](const DoubleArray& frames) { return camera_gain(to_volume(frames, "frames")); },
        py::arg("frames"),
        "Gain β from temporal replicates at constant illumination (planes are frames).");
}
