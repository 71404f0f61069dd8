#include "cocoa/noise.hpp"

#include <cmath>

#include "cocoa/rng.hpp"

namespace cocoa {

void NoiseModel::validate() const {
    if (!(gain > 0.0)) throw ConfigError("camera gain must be positive");
    if (readout < 0.0) throw ConfigError("readout noise must be non-negative");
}

ImageStack apply_noise(const Volume& expected_photons, Pitches pitch, const NoiseModel& model) {
    model.validate();
    ImageStack out;
    out.vol = Volume(expected_photons.shape);
    out.pitch = pitch;
    out.gain = model.gain;
    out.readout = model.readout;

    Rng rng(model.seed);
    for (std::size_t i = 0; i < expected_photons.data.size(); ++i) {
        double c = expected_photons.data[i];
        if (!(c >= 0.0) || !std::isfinite(c))
            throw DomainError("expected photon counts must be finite and non-negative");
        double shot = model.gain * static_cast<double>(rng.poisson(c));
        // Always one Normal draw per voxel so the shot-noise stream is
        // unchanged when only the readout level differs.
        double read = rng.normal(0.0, 1.0) * model.readout;
        out.vol.data[i] = shot + read;
    }
    return out;
}

}  // namespace cocoa
