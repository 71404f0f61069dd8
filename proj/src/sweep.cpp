#include "cocoa/sweep.hpp"

#include <cmath>

#include "cocoa/rng.hpp"
#include "cocoa/simulate.hpp"

namespace cocoa {

void SweepSpec::validate() const {
    if (variable != "rms" && variable != "snr")
        throw ConfigError("sweep variable must be 'rms' or 'snr', got '" + variable + "'");
    if (values.empty()) throw ConfigError("sweep needs a non-empty value list");
    for (std::size_t i = 1; i < values.size(); ++i)
        if (!(values[i] > values[i - 1]))
            throw ConfigError("sweep values must be strictly increasing");
    for (double v : values)
        if (!std::isfinite(v) || v < 0.0) throw ConfigError("sweep values must be finite and >= 0");
    if (variable == "snr" && !(values.front() > 0.0))
        throw ConfigError("illumination values must be positive");
    if (repeats < 1) throw ConfigError("sweep repeats must be >= 1");
    if (modes != "low" && modes != "high" && modes != "fixed")
        throw ConfigError("sweep modes must be 'low', 'high', or 'fixed'");
    if (modes == "fixed") {
        from_ansi(fixed_mode);
        if (fixed_mode <= 2 || fixed_mode == 4)
            throw ConfigError("fixed sweep mode must be an estimable aberration mode");
    }
    if (!(fixed_rms >= 0.0)) throw ConfigError("fixed_rms must be >= 0");
    if (!(photons > 0.0)) throw ConfigError("photon budget must be positive");
}

std::vector<int> SweepSpec::mode_set() const {
    if (modes == "low") return low_order_modes();
    if (modes == "high") return high_order_modes();
    return {fixed_mode};
}

namespace {

WavefrontAberration sweep_aberration(const SweepSpec& spec, double rms, std::uint64_t seed) {
    const std::vector<int> set = spec.mode_set();
    if (spec.modes == "fixed") {
        WavefrontAberration a;
        a.set(spec.fixed_mode, rms);
        return a;
    }
    Rng rng(seed);
    return random_mixed_aberration(rms, set, rng);
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, const PhantomSpec& phantom,
                      const OpticalConfig& optical, const NoiseModel& noise,
                      const TrainConfig& train, std::uint64_t seed) {
    spec.validate();
    optical.validate();
    train.validate();

    const Structure3D truth = make_phantom(phantom);

    // Reference reconstruction: un-aberrated acquisition at the nominal
    // photon budget, estimated with the same training setup.
    constexpr std::uint64_t kRefStream = 0xfe0f;  // reference-acquisition stream tag
    Volume reference;
    {
        SimulationSpec sim;
        sim.photons_at_peak = spec.photons;
        sim.noise = noise;
        sim.noise.seed = mix_seed(seed, kRefStream, 0);
        const SimulationResult acq = simulate_stack(truth, optical, {}, sim);
        TrainConfig ref_train = train;
        ref_train.seed = mix_seed(seed, kRefStream, 1);
        reference = estimate(acq.stack, optical, ref_train).structure.vol;
    }

    SweepResult out;
    out.points.reserve(spec.values.size() * static_cast<std::size_t>(spec.repeats));
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        for (int r = 0; r < spec.repeats; ++r) {
            const std::uint64_t point_seed =
                mix_seed(seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(r));
            SweepPoint pt;
            pt.x = spec.values[i];
            pt.repeat = r;
            try {
                WavefrontAberration injected;
                SimulationSpec sim;
                sim.noise = noise;
                if (spec.variable == "rms") {
                    sim.photons_at_peak = spec.photons;
                    injected = sweep_aberration(spec, pt.x, mix_seed(point_seed, 21));
                } else {
                    sim.photons_at_peak = pt.x;
                    // One aberration per repeat, shared across the ladder.
                    injected = sweep_aberration(spec, spec.fixed_rms,
                                                mix_seed(seed, 31, static_cast<std::uint64_t>(r)));
                }
                sim.noise.seed = mix_seed(point_seed, 7);
                const SimulationResult acq = simulate_stack(truth, optical, injected, sim);

                TrainConfig pt_train = train;
                pt_train.seed = mix_seed(point_seed, 9);
                const EstimationResult est = estimate(acq.stack, optical, pt_train);

                pt.pcc = pcc(est.structure.vol, reference);
                pt.emd = emd_sliced(est.structure.vol, reference, optical.pitch(), 200, 2,
                                    mix_seed(point_seed, 15));
                const SbrResult sb = sbr(acq.stack.vol);
                pt.sbr = sb.sbr;
                pt.snr = snr(acq.stack.vol, sb.signal_mask, noise.gain, noise.readout);
                pt.rms_error = rms_wavefront_error(est.aberration, injected);
                pt.ok = true;
            } catch (const std::exception& e) {
                pt.ok = false;
                pt.error = e.what();
            }
            out.points.push_back(std::move(pt));
        }
    }

    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        double sp = 0.0, se = 0.0;
        int n = 0;
        for (int r = 0; r < spec.repeats; ++r) {
            const SweepPoint& pt = out.points[i * spec.repeats + r];
            if (!pt.ok) continue;
            sp += pt.pcc;
            se += pt.emd;
            ++n;
        }
        if (n == 0) continue;
        out.xs_used.push_back(spec.values[i]);
        out.pcc_mean.push_back(sp / n);
        out.emd_mean.push_back(se / n);
    }
    if (out.xs_used.size() >= 4) {
        out.pcc_fit = piecewise_cutoff(out.xs_used, out.pcc_mean);
        out.emd_fit = piecewise_cutoff(out.xs_used, out.emd_mean);
    }
    return out;
}

}  // namespace cocoa
