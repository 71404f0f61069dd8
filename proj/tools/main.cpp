// Command-line driver: PSF rendering, acquisition simulation, joint
// wavefront+structure estimation, deconvolution baselines, phase
// retrieval, metrics, and the sweep / correction-loop harnesses. Every
// command resolves its configuration (flags > config file > defaults),
// writes a resolved_config.json snapshot next to its outputs, and marks
// failed runs with a `run.failed` sentinel so partial outputs are never
// mistaken for results.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cocoa/correction.hpp"
#include "cocoa/gs.hpp"
#include "cocoa/metrics.hpp"
#include "cocoa/rld.hpp"
#include "cocoa/rng.hpp"
#include "cocoa/serialize.hpp"
#include "cocoa/simulate.hpp"
#include "cocoa/solver.hpp"
#include "cocoa/sweep.hpp"
#include "cocoa/tiff.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cocoa;

namespace {

// ---------------------------------------------------------------- config

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream f(path);
    if (!f) throw ConfigError("config file not found: " + path);
    json j = json::parse(f, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
    if (!j.is_object()) throw ConfigError("config root must be a JSON object: " + path);
    return j;
}

void reject_unknown(const json& obj, const std::vector<std::string>& allowed,
                    const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown config key '" + where + "." + key + "'");
    }
}

json section(const json& root, const char* name) {
    if (!root.contains(name)) return json::object();
    const json& s = root.at(name);
    if (!s.is_object()) throw ConfigError(std::string("config section '") + name +
                                          "' must be an object");
    return s;
}

double jnum(const json& o, const char* key, double dflt) {
    if (!o.contains(key)) return dflt;
    const json& v = o.at(key);
    if (!v.is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
    return v.get<double>();
}

int jint(const json& o, const char* key, int dflt) {
    if (!o.contains(key)) return dflt;
    const json& v = o.at(key);
    if (!v.is_number_integer())
        throw ConfigError(std::string("config key '") + key + "' must be an integer");
    return v.get<int>();
}

bool jbool(const json& o, const char* key, bool dflt) {
    if (!o.contains(key)) return dflt;
    const json& v = o.at(key);
    if (!v.is_boolean())
        throw ConfigError(std::string("config key '") + key + "' must be a boolean");
    return v.get<bool>();
}

std::string jstr(const json& o, const char* key, const std::string& dflt) {
    if (!o.contains(key)) return dflt;
    const json& v = o.at(key);
    if (!v.is_string())
        throw ConfigError(std::string("config key '") + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> jnums(const json& o, const char* key) {
    std::vector<double> out;
    if (!o.contains(key)) return out;
    const json& v = o.at(key);
    if (!v.is_array()) throw ConfigError(std::string("config key '") + key + "' must be an array");
    for (const json& e : v) {
        if (!e.is_number())
            throw ConfigError(std::string("config key '") + key + "' must hold numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<int> jints(const json& o, const char* key) {
    std::vector<int> out;
    if (!o.contains(key)) return out;
    const json& v = o.at(key);
    if (!v.is_array()) throw ConfigError(std::string("config key '") + key + "' must be an array");
    for (const json& e : v) {
        if (!e.is_number_integer())
            throw ConfigError(std::string("config key '") + key + "' must hold integers");
        out.push_back(e.get<int>());
    }
    return out;
}

// ------------------------------------------------------------- context

struct Ctx {
    std::string command;
    json cfg;  // config-file root
    fs::path out{"out"};
    std::uint64_t seed = 0;
    int threads = 1;
    std::optional<int> iterations;  // --iterations
    std::string mode;               // --mode
    json resolved = json::object();

    [[nodiscard]] std::string path(const std::string& name) const { return (out / name).string(); }
};

void finish_resolved(Ctx& ctx) {
    ctx.resolved["command"] = ctx.command;
    ctx.resolved["seed"] = ctx.seed;
    ctx.resolved["threads"] = ctx.threads;
    fs::create_directories(ctx.out);
    fs::remove(ctx.out / "run.failed");  // a fresh run clears any stale failure marker
    write_text_file(ctx.path("resolved_config.json"), ctx.resolved.dump(2) + "\n");
}

// --------------------------------------------------------- section parsers

OpticalConfig parse_optical(Ctx& ctx, const StackSidecar* sidecar = nullptr,
                            const Shape3* grid = nullptr) {
    const json o = section(ctx.cfg, "optical");
    reject_unknown(o,
                   {"numerical_aperture", "wavelength", "refractive_index", "lateral_pixel",
                    "axial_step", "nx", "ny", "nz"},
                   "optical");
    OpticalConfig cfg;
    if (sidecar) {
        if (sidecar->numerical_aperture > 0.0) cfg.numerical_aperture = sidecar->numerical_aperture;
        if (sidecar->wavelength > 0.0) cfg.wavelength = sidecar->wavelength;
        if (sidecar->pitch.dx > 0.0) cfg.lateral_pixel = sidecar->pitch.dx;
        if (sidecar->pitch.dz > 0.0) cfg.axial_step = sidecar->pitch.dz;
    }
    cfg.numerical_aperture = jnum(o, "numerical_aperture", cfg.numerical_aperture);
    cfg.wavelength = jnum(o, "wavelength", cfg.wavelength);
    cfg.refractive_index = jnum(o, "refractive_index", cfg.refractive_index);
    cfg.lateral_pixel = jnum(o, "lateral_pixel", cfg.lateral_pixel);
    cfg.axial_step = jnum(o, "axial_step", cfg.axial_step);
    cfg.nx = jint(o, "nx", grid ? grid->nx : cfg.nx);
    cfg.ny = jint(o, "ny", grid ? grid->ny : cfg.ny);
    cfg.nz = jint(o, "nz", grid ? grid->nz : cfg.nz);
    if (grid && !(cfg.shape() == *grid))
        throw ConfigError("optical grid " + cfg.shape().str() + " does not match the input stack " +
                          grid->str());
    cfg.validate();
    ctx.resolved["optical"] = {{"numerical_aperture", cfg.numerical_aperture},
                               {"wavelength", cfg.wavelength},
                               {"refractive_index", cfg.refractive_index},
                               {"lateral_pixel", cfg.lateral_pixel},
                               {"axial_step", cfg.axial_step},
                               {"nx", cfg.nx},
                               {"ny", cfg.ny},
                               {"nz", cfg.nz}};
    return cfg;
}

PhantomSpec parse_phantom(Ctx& ctx, const OpticalConfig& optical) {
    const json o = section(ctx.cfg, "phantom");
    reject_unknown(o,
                   {"kind", "brightness", "bead_radius", "volume_fraction", "bead_count",
                    "filament_count", "filament_radius", "protrusion_rate"},
                   "phantom");
    PhantomSpec spec;
    spec.shape = optical.shape();
    spec.pitch = optical.pitch();
    const std::string kind = jstr(o, "kind", "beads");
    if (kind == "beads")
        spec.kind = PhantomSpec::Kind::beads;
    else if (kind == "filaments")
        spec.kind = PhantomSpec::Kind::filaments;
    else
        throw ConfigError("phantom.kind must be 'beads' or 'filaments', got '" + kind + "'");
    spec.brightness = jnum(o, "brightness", spec.brightness);
    spec.bead_radius = jnum(o, "bead_radius", spec.bead_radius);
    spec.volume_fraction = jnum(o, "volume_fraction", spec.volume_fraction);
    spec.bead_count = jint(o, "bead_count", spec.bead_count);
    spec.filament_count = jint(o, "filament_count", spec.filament_count);
    spec.filament_radius = jnum(o, "filament_radius", spec.filament_radius);
    spec.protrusion_rate = jnum(o, "protrusion_rate", spec.protrusion_rate);
    spec.seed = mix_seed(ctx.seed, 11);
    ctx.resolved["phantom"] = {{"kind", kind},
                               {"brightness", spec.brightness},
                               {"bead_radius", spec.bead_radius},
                               {"volume_fraction", spec.volume_fraction},
                               {"bead_count", spec.bead_count},
                               {"filament_count", spec.filament_count},
                               {"filament_radius", spec.filament_radius},
                               {"protrusion_rate", spec.protrusion_rate}};
    return spec;
}

NoiseModel parse_noise(Ctx& ctx) {
    const json o = section(ctx.cfg, "noise");
    reject_unknown(o, {"gain", "readout"}, "noise");
    NoiseModel m;
    m.gain = jnum(o, "gain", m.gain);
    m.readout = jnum(o, "readout", m.readout);
    m.seed = mix_seed(ctx.seed, 12);
    m.validate();
    ctx.resolved["noise"] = {{"gain", m.gain}, {"readout", m.readout}};
    return m;
}

struct SimSection {
    double photons_at_peak = 200.0;
    bool noise_enabled = true;
};

SimSection parse_sim_section(Ctx& ctx) {
    const json o = section(ctx.cfg, "simulate");
    reject_unknown(o, {"photons_at_peak", "noise_enabled"}, "simulate");
    SimSection s;
    s.photons_at_peak = jnum(o, "photons_at_peak", s.photons_at_peak);
    s.noise_enabled = jbool(o, "noise_enabled", s.noise_enabled);
    if (!(s.photons_at_peak > 0.0)) throw ConfigError("simulate.photons_at_peak must be positive");
    ctx.resolved["simulate"] = {{"photons_at_peak", s.photons_at_peak},
                                {"noise_enabled", s.noise_enabled}};
    return s;
}

std::vector<int> parse_mode_list(const json& o, const char* key) {
    if (!o.contains(key)) return {};
    const json& v = o.at(key);
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "default") return default_mode_set();
        if (s == "low") return low_order_modes();
        if (s == "high") return high_order_modes();
        throw ConfigError(std::string(key) + " must be 'default', 'low', 'high', or an index list");
    }
    if (v.is_array()) {
        std::vector<int> out;
        for (const json& e : v) {
            if (!e.is_number_integer())
                throw ConfigError(std::string(key) + " list must hold integers");
            out.push_back(e.get<int>());
        }
        return out;
    }
    throw ConfigError(std::string(key) + " must be a string preset or an index list");
}

TrainConfig parse_train(Ctx& ctx) {
    const json o = section(ctx.cfg, "train");
    reject_unknown(o,
                   {"pretrain_iterations", "iterations", "lr_pretrain", "lr_structure",
                    "lr_zernike", "tv_weight", "l1_weight", "alpha_init", "modes", "margin",
                    "hidden", "skip_layers", "output", "n_radial", "n_axial", "include_raw",
                    "auto_frequencies", "ssim_window", "ssim_sigma"},
                   "train");
    TrainConfig t;
    t.pretrain_iterations = jint(o, "pretrain_iterations", t.pretrain_iterations);
    t.iterations = jint(o, "iterations", t.iterations);
    if (ctx.iterations) t.iterations = *ctx.iterations;
    t.lr_pretrain = jnum(o, "lr_pretrain", t.lr_pretrain);
    t.lr_structure = jnum(o, "lr_structure", t.lr_structure);
    t.lr_zernike = jnum(o, "lr_zernike", t.lr_zernike);
    t.weights.tv = jnum(o, "tv_weight", t.weights.tv);
    t.weights.l1 = jnum(o, "l1_weight", t.weights.l1);
    t.alpha_init = jnum(o, "alpha_init", t.alpha_init);
    t.modes = parse_mode_list(o, "modes");
    const std::vector<int> margin = jints(o, "margin");
    if (!margin.empty()) {
        if (margin.size() != 3) throw ConfigError("train.margin must be [z, y, x]");
        t.margin_z = margin[0];
        t.margin_y = margin[1];
        t.margin_x = margin[2];
    }
    const std::vector<int> hidden = jints(o, "hidden");
    if (!hidden.empty()) t.field.hidden = hidden;
    if (o.contains("skip_layers")) t.field.skip_layers = jints(o, "skip_layers");
    const std::string outact = jstr(o, "output", "softplus");
    if (outact == "softplus")
        t.field.output = FieldSpec::Output::softplus;
    else if (outact == "relu")
        t.field.output = FieldSpec::Output::relu;
    else
        throw ConfigError("train.output must be 'softplus' or 'relu'");
    t.field.encoding.n_radial = jint(o, "n_radial", t.field.encoding.n_radial);
    t.field.encoding.n_axial = jint(o, "n_axial", t.field.encoding.n_axial);
    t.field.encoding.include_raw = jbool(o, "include_raw", t.field.encoding.include_raw);
    t.auto_frequencies = jbool(o, "auto_frequencies", t.auto_frequencies);
    t.ssim.window = jint(o, "ssim_window", t.ssim.window);
    t.ssim.sigma = jnum(o, "ssim_sigma", t.ssim.sigma);
    t.seed = ctx.seed;
    t.validate();
    ctx.resolved["train"] = {{"pretrain_iterations", t.pretrain_iterations},
                             {"iterations", t.iterations},
                             {"lr_pretrain", t.lr_pretrain},
                             {"lr_structure", t.lr_structure},
                             {"lr_zernike", t.lr_zernike},
                             {"tv_weight", t.weights.tv},
                             {"l1_weight", t.weights.l1},
                             {"alpha_init", t.alpha_init},
                             {"modes", t.mode_set()},
                             {"margin", {t.margin_z, t.margin_y, t.margin_x}},
                             {"hidden", t.field.hidden},
                             {"skip_layers", t.field.skip_layers},
                             {"output", outact},
                             {"n_radial", t.field.encoding.n_radial},
                             {"n_axial", t.field.encoding.n_axial},
                             {"include_raw", t.field.encoding.include_raw},
                             {"auto_frequencies", t.auto_frequencies},
                             {"ssim_window", t.ssim.window},
                             {"ssim_sigma", t.ssim.sigma}};
    return t;
}

// Aberration from "aberration" (inline object or path string) or
// "aberration_file"; absent → flat wavefront.
WavefrontAberration parse_aberration(Ctx& ctx) {
    WavefrontAberration a;
    const bool has_inline = ctx.cfg.contains("aberration");
    const bool has_file = ctx.cfg.contains("aberration_file");
    if (has_inline && has_file)
        throw ConfigError("give either 'aberration' or 'aberration_file', not both");
    if (has_inline) {
        const json& v = ctx.cfg.at("aberration");
        if (v.is_string()) {
            const std::string p = v.get<std::string>();
            if (!fs::exists(p)) throw ConfigError("aberration file not found: " + p);
            a = load_aberration(p);
        } else if (v.is_object()) {
            a = aberration_from_json_text(v.dump());
        } else {
            throw ConfigError("'aberration' must be an object or a path string");
        }
    } else if (has_file) {
        const std::string p = ctx.cfg.at("aberration_file").get<std::string>();
        if (!fs::exists(p)) throw ConfigError("aberration file not found: " + p);
        a = load_aberration(p);
    }
    json ja = json::object();
    for (const auto& [j, v] : a.coeffs) ja[std::to_string(j)] = v;
    ctx.resolved["aberration"] = ja;
    return a;
}

struct IoSection {
    std::string stack, truth, psf, aberration, true_aberration;
};

IoSection parse_io(Ctx& ctx) {
    const json o = section(ctx.cfg, "io");
    reject_unknown(o, {"stack", "truth", "psf", "aberration", "true_aberration"}, "io");
    IoSection io;
    io.stack = jstr(o, "stack", "");
    io.truth = jstr(o, "truth", "");
    io.psf = jstr(o, "psf", "");
    io.aberration = jstr(o, "aberration", "");
    io.true_aberration = jstr(o, "true_aberration", "");
    ctx.resolved["io"] = {{"stack", io.stack},
                          {"truth", io.truth},
                          {"psf", io.psf},
                          {"aberration", io.aberration},
                          {"true_aberration", io.true_aberration}};
    return io;
}

std::string sidecar_path(const std::string& tiff_path) {
    fs::path p(tiff_path);
    p.replace_extension(".json");
    return p.string();
}

ImageStack load_stack(const std::string& path, StackSidecar* sidecar_out = nullptr) {
    if (path.empty()) throw ConfigError("io.stack is required for this command");
    if (!fs::exists(path)) throw ConfigError("input stack not found: " + path);
    const std::string sp = sidecar_path(path);
    if (!fs::exists(sp)) throw ConfigError("stack sidecar not found: " + sp);
    const StackSidecar sc = load_sidecar(sp);
    ImageStack stack;
    stack.vol = read_tiff(path);
    stack.pitch = sc.pitch;
    stack.gain = sc.gain > 0.0 ? sc.gain : 1.0;
    stack.readout = sc.readout;
    if (sidecar_out) *sidecar_out = sc;
    return stack;
}

void write_volume(const Ctx& ctx, const std::string& name, const Volume& v, TiffPixel pixel,
                  const StackSidecar& sidecar) {
    write_tiff(ctx.path(name + ".tif"), v, pixel);
    save_sidecar(ctx.path(name + ".json"), sidecar);
}

StackSidecar make_sidecar(const OpticalConfig& opt, double gain = 0.0, double readout = 0.0) {
    StackSidecar s;
    s.pitch = opt.pitch();
    s.gain = gain;
    s.readout = readout;
    s.wavelength = opt.wavelength;
    s.numerical_aperture = opt.numerical_aperture;
    return s;
}

// ------------------------------------------------------------- commands

int cmd_psf(Ctx& ctx) {
    reject_unknown(ctx.cfg, {"seed", "out", "threads", "optical", "aberration", "aberration_file"},
                   "");
    const OpticalConfig optical = parse_optical(ctx);
    const WavefrontAberration aberration = parse_aberration(ctx);
    finish_resolved(ctx);

    const Psf3D psf = psf_3d(optical, aberration);
    write_tiff(ctx.path("psf.tif"), psf.vol, TiffPixel::f32);
    save_sidecar(ctx.path("psf.json"), make_sidecar(optical));
    json meta = {{"focal_plane", psf.focal_plane},
                 {"shape", {psf.vol.shape.nz, psf.vol.shape.ny, psf.vol.shape.nx}},
                 {"sum", vsum(psf.vol)},
                 {"rms_aberration", aberration.rms()},
                 {"warnings", optical.warnings()}};
    write_text_file(ctx.path("metadata.json"), meta.dump(2) + "\n");
    return 0;
}

int cmd_simulate(Ctx& ctx) {
    reject_unknown(ctx.cfg,
                   {"seed", "out", "threads", "optical", "phantom", "noise", "simulate",
                    "aberration", "aberration_file"},
                   "");
    const OpticalConfig optical = parse_optical(ctx);
    const PhantomSpec phantom = parse_phantom(ctx, optical);
    const NoiseModel noise = parse_noise(ctx);
    const SimSection sim = parse_sim_section(ctx);
    const WavefrontAberration aberration = parse_aberration(ctx);
    finish_resolved(ctx);

    const Structure3D truth = make_phantom(phantom);
    SimulationSpec spec;
    spec.photons_at_peak = sim.photons_at_peak;
    spec.noise = noise;
    const SimulationResult r = simulate_stack(truth, optical, aberration, spec);

    write_volume(ctx, "truth", truth.vol, TiffPixel::f32, make_sidecar(optical));
    write_volume(ctx, "clean", r.clean, TiffPixel::f32, make_sidecar(optical));
    const Volume& stack_vol = sim.noise_enabled ? r.stack.vol : r.clean;
    write_volume(ctx, "stack", stack_vol, sim.noise_enabled ? TiffPixel::u16 : TiffPixel::f32,
                 make_sidecar(optical, sim.noise_enabled ? noise.gain : 1.0,
                              sim.noise_enabled ? noise.readout : 0.0));
    save_aberration(ctx.path("aberration.json"), aberration);

    // Declared SNR: photon means from the clean image over the same signal
    // voxels the metrics pipeline would pick on the written stack.
    json meta = {{"photons_at_peak", sim.photons_at_peak},
                 {"noise_enabled", sim.noise_enabled},
                 {"pixel_format", sim.noise_enabled ? "u16" : "f32"},
                 {"rms_aberration", aberration.rms()}};
    try {
        const SbrResult sb = sbr(stack_vol);
        double mean_photons = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < sb.signal_mask.size(); ++i)
            if (sb.signal_mask[i]) {
                mean_photons += r.clean.data[i];
                ++n;
            }
        mean_photons /= std::max<std::size_t>(n, 1);
        const double rp = sim.noise_enabled ? noise.readout / noise.gain : 0.0;
        meta["declared_snr"] = mean_photons / std::sqrt(mean_photons + rp * rp);
        meta["declared_sbr"] = sb.sbr;
    } catch (const Error& e) {
        meta["declared_snr_error"] = e.what();
    }
    write_text_file(ctx.path("metadata.json"), meta.dump(2) + "\n");
    return 0;
}

int cmd_estimate(Ctx& ctx) {
    reject_unknown(ctx.cfg, {"seed", "out", "threads", "optical", "train", "io"}, "");
    const IoSection io = parse_io(ctx);
    StackSidecar sc;
    const ImageStack stack = load_stack(io.stack, &sc);
    const Shape3 grid = stack.vol.shape;
    const OpticalConfig optical = parse_optical(ctx, &sc, &grid);
    const TrainConfig train = parse_train(ctx);
    finish_resolved(ctx);

    EstimationResult result;
    try {
        result = estimate(stack, optical, train);
    } catch (const TrainingError& e) {
        save_loss_trace(ctx.path("loss_trace.csv"), e.trace);
        throw TrainingError(std::string(e.what()) + " (loss trace written to " +
                                ctx.path("loss_trace.csv") + ")",
                            e.trace);
    }

    save_aberration(ctx.path("aberration.json"), result.aberration);
    write_volume(ctx, "structure", result.structure.vol, TiffPixel::f32, make_sidecar(optical));
    save_loss_trace(ctx.path("loss_trace.csv"), result.trace);
    save_field(ctx.path("field.bin"), result.field_spec, result.field_params, train.seed);

    MetricsReport report;
    if (!io.truth.empty()) {
        if (!fs::exists(io.truth)) throw ConfigError("truth volume not found: " + io.truth);
        const Volume truth = read_tiff(io.truth);
        require_shape(truth, result.structure.vol.shape, "truth volume");
        report.pcc = pcc(result.structure.vol, truth);
        report.emd = emd_sliced(result.structure.vol, truth, optical.pitch(), 200, 2,
                                mix_seed(ctx.seed, 15));
    }
    if (!io.true_aberration.empty()) {
        if (!fs::exists(io.true_aberration))
            throw ConfigError("true aberration not found: " + io.true_aberration);
        report.rms_wavefront_error =
            rms_wavefront_error(result.aberration, load_aberration(io.true_aberration));
    }
    save_metrics_report(ctx.path("report.json"), report);
    return 0;
}

int cmd_deconv(Ctx& ctx) {
    reject_unknown(ctx.cfg, {"seed", "out", "threads", "optical", "rld", "io"}, "");
    const json o = section(ctx.cfg, "rld");
    reject_unknown(o, {"mode", "iterations", "alternations", "final_iterations", "floor_scale"},
                   "rld");
    std::string mode = jstr(o, "mode", "nonblind");
    if (!ctx.mode.empty()) mode = ctx.mode;
    if (mode != "nonblind" && mode != "blind")
        throw ConfigError("deconvolution mode must be 'nonblind' or 'blind', got '" + mode + "'");

    const IoSection io = parse_io(ctx);
    StackSidecar sc;
    const ImageStack stack = load_stack(io.stack, &sc);
    const Shape3 grid = stack.vol.shape;
    const OpticalConfig optical = parse_optical(ctx, &sc, &grid);

    RlConfig rl;
    rl.iterations = jint(o, "iterations", rl.iterations);
    BlindRlConfig blind;
    blind.alternations = jint(o, "alternations", blind.alternations);
    blind.final_iterations = jint(o, "final_iterations", blind.final_iterations);
    blind.floor_scale = rl.floor_scale = jnum(o, "floor_scale", rl.floor_scale);
    if (ctx.iterations) {
        rl.iterations = *ctx.iterations;
        blind.alternations = *ctx.iterations;
    }
    ctx.resolved["rld"] = {{"mode", mode},
                           {"iterations", rl.iterations},
                           {"alternations", blind.alternations},
                           {"final_iterations", blind.final_iterations},
                           {"floor_scale", rl.floor_scale}};
    finish_resolved(ctx);

    json meta = {{"mode", mode}};
    if (mode == "nonblind") {
        Volume psf;
        if (!io.psf.empty()) {
            if (!fs::exists(io.psf)) throw ConfigError("PSF volume not found: " + io.psf);
            psf = read_tiff(io.psf);
        } else if (!io.aberration.empty()) {
            if (!fs::exists(io.aberration))
                throw ConfigError("aberration file not found: " + io.aberration);
            psf = psf_3d(optical, load_aberration(io.aberration)).vol;
        } else {
            throw ConfigError("nonblind deconvolution needs io.psf or io.aberration");
        }
        const Volume result = richardson_lucy(stack.vol, psf, rl);
        write_volume(ctx, "deconvolved", result, TiffPixel::f32, make_sidecar(optical));
        meta["iterations"] = rl.iterations;
    } else {
        const Volume psf0 = psf_3d(optical, {}).vol;
        const BlindRlResult result = blind_richardson_lucy(stack.vol, psf0, blind);
        write_volume(ctx, "deconvolved", result.image, TiffPixel::f32, make_sidecar(optical));
        write_volume(ctx, "psf_estimate", result.psf, TiffPixel::f32, make_sidecar(optical));
        meta["alternations"] = blind.alternations;
        meta["final_iterations"] = blind.final_iterations;
    }
    write_text_file(ctx.path("metadata.json"), meta.dump(2) + "\n");
    return 0;
}

std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

json fit_to_json(const PiecewiseFit& f, double x0, double x1) {
    return json{{"breakpoint", f.breakpoint},
                {"breakpoint_normalized", (f.breakpoint - x0) / (x1 - x0)},
                {"slope1", f.slope1},
                {"intercept1", f.intercept1},
                {"slope2", f.slope2},
                {"intercept2", f.intercept2},
                {"sse", f.sse}};
}

int cmd_sweep(Ctx& ctx) {
    reject_unknown(ctx.cfg,
                   {"seed", "out", "threads", "optical", "phantom", "noise", "train", "sweep"},
                   "");
    const json o = section(ctx.cfg, "sweep");
    reject_unknown(
        o, {"variable", "values", "repeats", "modes", "fixed_mode", "fixed_rms", "photons_at_peak"},
        "sweep");
    SweepSpec spec;
    spec.variable = jstr(o, "variable", spec.variable);
    if (!ctx.mode.empty()) spec.variable = ctx.mode;
    spec.values = jnums(o, "values");
    spec.repeats = jint(o, "repeats", spec.repeats);
    spec.modes = jstr(o, "modes", spec.modes);
    spec.fixed_mode = jint(o, "fixed_mode", spec.fixed_mode);
    spec.fixed_rms = jnum(o, "fixed_rms", spec.fixed_rms);
    spec.photons = jnum(o, "photons_at_peak", spec.photons);
    spec.validate();

    const OpticalConfig optical = parse_optical(ctx);
    const PhantomSpec phantom = parse_phantom(ctx, optical);
    const NoiseModel noise = parse_noise(ctx);
    const TrainConfig train = parse_train(ctx);
    ctx.resolved["sweep"] = {{"variable", spec.variable}, {"values", spec.values},
                             {"repeats", spec.repeats},  {"modes", spec.modes},
                             {"fixed_mode", spec.fixed_mode}, {"fixed_rms", spec.fixed_rms},
                             {"photons_at_peak", spec.photons}};
    finish_resolved(ctx);

    const SweepResult result = run_sweep(spec, phantom, optical, noise, train, ctx.seed);

    std::ostringstream csv;
    csv << "# sweep v1\n";
    csv << "x,pcc,emd,snr,sbr,rms_error,repeat,status\n";
    csv.precision(12);
    for (const SweepPoint& pt : result.points) {
        if (pt.ok)
            csv << pt.x << ',' << pt.pcc << ',' << pt.emd << ',' << pt.snr << ',' << pt.sbr << ','
                << pt.rms_error << ',' << pt.repeat << ",ok\n";
        else
            csv << pt.x << ",,,,,," << pt.repeat << ",error:" << csv_safe(pt.error) << '\n';
    }
    write_text_file(ctx.path("sweep.csv"), csv.str());

    json cut = {{"x_min", spec.values.front()}, {"x_max", spec.values.back()}};
    if (result.pcc_fit)
        cut["pcc_fit"] = fit_to_json(*result.pcc_fit, spec.values.front(), spec.values.back());
    if (result.emd_fit)
        cut["emd_fit"] = fit_to_json(*result.emd_fit, spec.values.front(), spec.values.back());
    write_text_file(ctx.path("cutoffs.json"), cut.dump(2) + "\n");
    return 0;
}

int cmd_correct_loop(Ctx& ctx) {
    reject_unknown(ctx.cfg,
                   {"seed", "out", "threads", "optical", "phantom", "noise", "simulate", "train",
                    "correction", "aberration", "aberration_file"},
                   "");
    const json o = section(ctx.cfg, "correction");
    reject_unknown(o, {"rounds", "initial_rms", "initial_modes"}, "correction");
    const OpticalConfig optical = parse_optical(ctx);
    const PhantomSpec phantom = parse_phantom(ctx, optical);
    const NoiseModel noise = parse_noise(ctx);
    const SimSection sim = parse_sim_section(ctx);

    CorrectionConfig cfg;
    cfg.rounds = jint(o, "rounds", cfg.rounds);
    cfg.sim.photons_at_peak = sim.photons_at_peak;
    cfg.sim.noise = noise;
    cfg.train = parse_train(ctx);

    WavefrontAberration initial = parse_aberration(ctx);
    const double initial_rms = jnum(o, "initial_rms", -1.0);
    if (initial_rms >= 0.0) {
        if (!initial.coeffs.empty())
            throw ConfigError("give either an explicit aberration or correction.initial_rms");
        Rng rng(mix_seed(ctx.seed, 17));
        initial = random_mixed_aberration(initial_rms,
                                          parse_mode_list(o.contains("initial_modes") ? o : json{{"initial_modes", "low"}},
                                                          "initial_modes"),
                                          rng);
        json ja = json::object();
        for (const auto& [j, v] : initial.coeffs) ja[std::to_string(j)] = v;
        ctx.resolved["aberration"] = ja;
    }
    ctx.resolved["correction"] = {{"rounds", cfg.rounds}, {"initial_rms", initial.rms()}};
    finish_resolved(ctx);

    const Structure3D truth = make_phantom(phantom);
    const std::vector<CorrectionRound> rounds = iterative_correction(truth, optical, initial, cfg);

    std::ostringstream csv;
    csv << "# correction-loop v1\n";
    csv << "round,applied_rms,estimate_rms,residual_rms,contrast\n";
    csv.precision(12);
    json jr = json::array();
    for (const CorrectionRound& r : rounds) {
        csv << r.round << ',' << r.applied.rms() << ',' << r.estimate.rms() << ','
            << r.residual_rms << ',' << r.contrast << '\n';
        json row = {{"round", r.round},
                    {"residual_rms", r.residual_rms},
                    {"contrast", r.contrast}};
        json ja = json::object(), je = json::object();
        for (const auto& [j, v] : r.applied.coeffs) ja[std::to_string(j)] = v;
        for (const auto& [j, v] : r.estimate.coeffs) je[std::to_string(j)] = v;
        row["applied"] = ja;
        row["estimate"] = je;
        jr.push_back(row);
    }
    write_text_file(ctx.path("correction.csv"), csv.str());
    write_text_file(ctx.path("rounds.json"), jr.dump(2) + "\n");
    return 0;
}

int cmd_gs(Ctx& ctx) {
    reject_unknown(ctx.cfg, {"seed", "out", "threads", "optical", "gs", "io"}, "");
    const json o = section(ctx.cfg, "gs");
    reject_unknown(o, {"iterations", "subtract_background", "recenter", "modes", "min_peak_snr"},
                   "gs");
    const IoSection io = parse_io(ctx);
    StackSidecar sc;
    const ImageStack stack = load_stack(io.stack, &sc);
    const Shape3 grid = stack.vol.shape;
    const OpticalConfig optical = parse_optical(ctx, &sc, &grid);

    GsConfig cfg;
    cfg.iterations = jint(o, "iterations", cfg.iterations);
    if (ctx.iterations) cfg.iterations = *ctx.iterations;
    cfg.subtract_background = jbool(o, "subtract_background", cfg.subtract_background);
    cfg.recenter = jbool(o, "recenter", cfg.recenter);
    cfg.modes = parse_mode_list(o, "modes");
    const double min_peak_snr = jnum(o, "min_peak_snr", 5.0);
    ctx.resolved["gs"] = {{"iterations", cfg.iterations},
                          {"subtract_background", cfg.subtract_background},
                          {"recenter", cfg.recenter},
                          {"min_peak_snr", min_peak_snr}};
    finish_resolved(ctx);

    // Robust peak-SNR gate: (max − median) over the MAD-scaled noise level.
    {
        const double med = percentile(stack.vol.data, 50.0);
        std::vector<double> dev(stack.vol.data.size());
        for (std::size_t i = 0; i < dev.size(); ++i) dev[i] = std::abs(stack.vol.data[i] - med);
        const double sigma = 1.4826 * percentile(dev, 50.0);
        if (sigma > 0.0) {
            const double peak_snr = (vmax(stack.vol) - med) / sigma;
            if (peak_snr < min_peak_snr) {
                std::ostringstream msg;
                msg << "bead stack peak SNR " << peak_snr << " is below the threshold "
                    << min_peak_snr;
                throw InputError(msg.str());
            }
        }
    }

    const GsResult result = gerchberg_saxton(stack, optical, cfg);
    save_aberration(ctx.path("aberration.json"), result.aberration);
    Volume phase({1, optical.ny, optical.nx});
    phase.data = result.phase;
    write_tiff(ctx.path("pupil_phase.tif"), phase, TiffPixel::f32);
    json meta = {{"fit_rms_residual", result.fit_rms_residual},
                 {"used_gradient_fit", result.used_gradient_fit},
                 {"rms_aberration", result.aberration.rms()}};
    write_text_file(ctx.path("metadata.json"), meta.dump(2) + "\n");
    return 0;
}

int cmd_metrics(Ctx& ctx) {
    reject_unknown(ctx.cfg, {"seed", "out", "threads", "metrics"}, "");
    const json o = section(ctx.cfg, "metrics");
    reject_unknown(o,
                   {"stack", "reference", "aberration", "reference_aberration", "psd",
                    "emd_projections"},
                   "metrics");
    const std::string stack_path = jstr(o, "stack", "");
    if (stack_path.empty()) throw ConfigError("metrics.stack is required");
    StackSidecar sc;
    const ImageStack stack = load_stack(stack_path, &sc);
    const std::string ref_path = jstr(o, "reference", "");
    const std::string ab_path = jstr(o, "aberration", "");
    const std::string ref_ab_path = jstr(o, "reference_aberration", "");
    const bool want_psd = jbool(o, "psd", false);
    const int emd_projections = jint(o, "emd_projections", 200);
    ctx.resolved["metrics"] = {{"stack", stack_path},
                               {"reference", ref_path},
                               {"aberration", ab_path},
                               {"reference_aberration", ref_ab_path},
                               {"psd", want_psd},
                               {"emd_projections", emd_projections}};
    finish_resolved(ctx);

    MetricsReport report;
    json errors = json::array();
    auto attempt = [&](const char* what, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            errors.push_back(std::string(what) + ": " + e.what());
        }
    };
    SbrResult sb;
    bool have_sbr = false;
    attempt("sbr", [&] {
        sb = sbr(stack.vol);
        report.sbr = sb.sbr;
        have_sbr = true;
    });
    attempt("snr", [&] {
        if (!have_sbr) throw DomainError("needs the signal mask from the SBR pipeline");
        if (!(sc.gain > 0.0)) throw InputError("sidecar has no camera gain");
        report.snr = snr(stack.vol, sb.signal_mask, sc.gain, sc.readout);
    });
    attempt("contrast", [&] { report.contrast = image_contrast(mip_z(stack.vol)); });
    if (want_psd)
        attempt("radial_psd", [&] { report.psd = radial_psd(mip_z(stack.vol), sc.pitch.dx); });
    if (!ref_path.empty()) {
        attempt("pcc/emd", [&] {
            if (!fs::exists(ref_path)) throw ConfigError("reference volume not found: " + ref_path);
            const Volume ref = read_tiff(ref_path);
            report.pcc = pcc(stack.vol, ref);
            report.emd = emd_sliced(stack.vol, ref, stack.pitch, emd_projections, 2,
                                    mix_seed(ctx.seed, 15));
        });
    }
    if (!ab_path.empty() && !ref_ab_path.empty()) {
        attempt("rms_wavefront_error", [&] {
            report.rms_wavefront_error =
                rms_wavefront_error(load_aberration(ab_path), load_aberration(ref_ab_path));
        });
    }

    json out = json::parse(metrics_report_to_json(report));
    if (!errors.empty()) out["errors"] = errors;
    write_text_file(ctx.path("metrics.json"), out.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Widefield wavefront/structure estimation toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, mode;
    std::uint64_t seed = 0;
    int iterations = -1;
    int threads = 1;

    static const char* kCommands[] = {"psf",   "simulate",     "estimate", "deconv",
                                      "sweep", "correct-loop", "gs",       "metrics"};
    for (const char* name : kCommands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--seed", seed, "global random seed");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--iterations", iterations, "override the command's main iteration count");
        sub->add_option("--mode", mode, "mode override (deconv: nonblind|blind; sweep: rms|snr)");
        sub->add_option("--threads", threads, "worker thread cap")->envname("COCOA_THREADS");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    CLI::App* sub = app.get_subcommands().front();
    const bool seed_given = sub->count("--seed") > 0;
    const bool out_given = sub->count("--out") > 0;
    const bool iter_given = sub->count("--iterations") > 0;

    Ctx ctx;
    ctx.command = sub->get_name();
    int code = 0;
    std::string failure;
    try {
        ctx.cfg = load_config_file(config_path);
        if (ctx.cfg.contains("seed") && !seed_given) {
            if (!ctx.cfg.at("seed").is_number_unsigned() && !ctx.cfg.at("seed").is_number_integer())
                throw ConfigError("config key 'seed' must be an integer");
            ctx.seed = ctx.cfg.at("seed").get<std::uint64_t>();
        } else {
            ctx.seed = seed;
        }
        ctx.out = out_given ? out_dir : jstr(ctx.cfg, "out", "out");
        if (iter_given) {
            if (iterations < 1) throw ConfigError("--iterations must be >= 1");
            ctx.iterations = iterations;
        }
        ctx.mode = mode;
        if (threads < 1) throw ConfigError("--threads must be >= 1");
        ctx.threads = threads;

        if (ctx.command == "psf") return cmd_psf(ctx);
        if (ctx.command == "simulate") return cmd_simulate(ctx);
        if (ctx.command == "estimate") return cmd_estimate(ctx);
        if (ctx.command == "deconv") return cmd_deconv(ctx);
        if (ctx.command == "sweep") return cmd_sweep(ctx);
        if (ctx.command == "correct-loop") return cmd_correct_loop(ctx);
        if (ctx.command == "gs") return cmd_gs(ctx);
        if (ctx.command == "metrics") return cmd_metrics(ctx);
        throw ConfigError("unknown command " + ctx.command);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        failure = e.what();
        code = 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        failure = e.what();
        code = 1;
    }
    // Mark the output directory so partial artifacts are never mistaken for
    // a completed run.
    try {
        if (fs::exists(ctx.out))
            write_text_file((ctx.out / "run.failed").string(),
                            ctx.command + " failed: " + failure + "\n");
    } catch (...) {
        // the marker is best-effort; the exit code is authoritative
    }
    return code;
}
