#include "cocoa/simulate.hpp"

#include <cmath>

#include "cocoa/conv.hpp"

namespace cocoa {

void SimulationSpec::validate() const {
    if (!(photons_at_peak > 0.0) || !std::isfinite(photons_at_peak))
        throw ConfigError("photon budget must be positive and finite");
    noise.validate();
}

SimulationResult simulate_stack(const Structure3D& truth, const OpticalConfig& optical,
                                const WavefrontAberration& aberration,
                                const SimulationSpec& spec) {
    optical.validate();
    spec.validate();
    require_shape(truth.vol, optical.shape(), "structure");
    if (!all_finite(truth.vol)) throw InputError("structure contains non-finite values");
    if (vmin(truth.vol) < 0.0) throw InputError("structure intensities must be non-negative");

    SimulationResult out;
    out.psf = psf_3d(optical, aberration);
    out.clean = convolve_3d(truth.vol, out.psf.vol, truth.vol.shape);
    double peak = vmax(out.clean);
    if (!(peak > 0.0)) throw InputError("structure is empty; simulated image has no signal");
    const double scale = spec.photons_at_peak / peak;
    for (double& v : out.clean.data) {
        v *= scale;
        // Linear convolution of non-negative factors; tiny negatives are FFT
        // round-off and would break the Poisson sampler.
        if (v < 0.0) v = 0.0;
    }
    out.stack = apply_noise(out.clean, optical.pitch(), spec.noise);
    return out;
}

}  // namespace cocoa
