#include "cocoa/correction.hpp"

#include "cocoa/metrics.hpp"
#include "cocoa/rng.hpp"

namespace cocoa {

void CorrectionConfig::validate() const {
    if (rounds < 1) throw ConfigError("correction loop needs at least one round");
    sim.validate();
    train.validate();
}

std::vector<CorrectionRound> iterative_correction(const Structure3D& truth,
                                                  const OpticalConfig& optical,
                                                  const WavefrontAberration& initial,
                                                  const CorrectionConfig& cfg) {
    cfg.validate();
    std::vector<CorrectionRound> rounds;
    rounds.reserve(static_cast<std::size_t>(cfg.rounds));
    WavefrontAberration residual = initial;
    for (int r = 1; r <= cfg.rounds; ++r) {
        CorrectionRound row;
        row.round = r;
        row.applied = residual;

        // Image through the current residual; each round sees fresh noise.
        SimulationSpec sim = cfg.sim;
        sim.noise.seed = mix_seed(cfg.sim.noise.seed, static_cast<std::uint64_t>(r), 0);
        const SimulationResult acq = simulate_stack(truth, optical, residual, sim);

        TrainConfig train = cfg.train;
        train.seed = mix_seed(cfg.train.seed, static_cast<std::uint64_t>(r), 1);
        const EstimationResult est = estimate(acq.stack, optical, train);
        row.estimate = est.aberration;

        residual = residual.plus(est.aberration.negated());
        row.residual_rms = residual.rms();

        sim.noise.seed = mix_seed(cfg.sim.noise.seed, static_cast<std::uint64_t>(r), 2);
        const SimulationResult post = simulate_stack(truth, optical, residual, sim);
        row.contrast = image_contrast(mip_z(post.stack.vol));
        rounds.push_back(std::move(row));
    }
    return rounds;
}

}  // namespace cocoa
