#pragma once

// Synthetic ground-truth structures: non-overlapping fluorescent beads at a
// target volume fraction, or smooth random filaments with optional short
// protrusions. Values are expected-photon intensities (peak = brightness).

#include <cstdint>

#include "cocoa/types.hpp"

namespace cocoa {

struct PhantomSpec {
    enum class Kind { beads, filaments };
    Kind kind = Kind::beads;
    Shape3 shape{32, 64, 64};
    Pitches pitch{0.25, 0.1, 0.1};
    double brightness = 1.0;        // value inside a fully covered voxel

    // beads
    double bead_radius = 0.25;      // µm
    double volume_fraction = 2e-5;  // total bead volume / FOV volume
    int bead_count = -1;            // ≥ 0 overrides volume_fraction

    // filaments
    int filament_count = 3;
    double filament_radius = 0.35;  // µm
    double protrusion_rate = 0.5;   // expected protrusions per µm of length

    std::uint64_t seed = 0;
};

// Deterministic under a fixed seed. Throws GenerationError when
// non-overlapping bead placement fails after bounded retries, ConfigError
// on invalid parameters.
Structure3D make_phantom(const PhantomSpec& spec);

}  // namespace cocoa
