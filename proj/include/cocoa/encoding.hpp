#pragma once

// Fourier-feature encoding of normalized voxel coordinates. Lateral
// position enters through the cylindrical radius ρ = √(x²+y²) only — the
// radial ladder {sin,cos}(2πf_k ρ) — with a separate axial ladder in z and
// the raw (x,y,z) triple appended. Frequencies rise from `base` to `max`
// (half the grid Nyquist by default) on a geometric or linear ladder.

#include <vector>

#include "cocoa/types.hpp"

namespace cocoa {

struct EncodingSpec {
    enum class Spacing { geometric, linear };

    int n_radial = 10;
    int n_axial = 6;
    double radial_base = 1.0, radial_max = 8.0;  // cycles per normalized unit
    double axial_base = 1.0, axial_max = 4.0;
    Spacing spacing = Spacing::geometric;
    bool include_raw = true;

    // Ladder maxima at half the grid Nyquist: n samples across [-1,1] give
    // Nyquist n/4, so max = n/8 (never below base).
    static EncodingSpec for_grid(Shape3 grid);

    void validate() const;  // throws ConfigError
    [[nodiscard]] int dim() const {
        return 2 * (n_radial + n_axial) + (include_raw ? 3 : 0);
    }
    [[nodiscard]] std::vector<double> radial_frequencies() const;
    [[nodiscard]] std::vector<double> axial_frequencies() const;
};

// Normalized voxel-center coordinate along one axis: (2i+1-n)/n in (-1,1).
double normalized_coord(int i, int n);

// Encode n_points rows of (x, y, z) into out (n_points × dim, row-major).
// Layout per row: radial sin/cos pairs, axial sin/cos pairs, then raw xyz.
void encode(const EncodingSpec& spec, const double* xyz, std::size_t n_points, double* out);

}  // namespace cocoa
