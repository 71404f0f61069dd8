#pragma once

// Zernike polynomials over the unit disk, ANSI/OSA single-index ordering,
// orthonormal (unit-RMS) normalization so a coefficient equals the RMS
// wavefront contribution of its mode. Coefficients are in units of the
// emission wavelength λ throughout.

#include <map>
#include <vector>

#include "cocoa/rng.hpp"
#include "cocoa/types.hpp"

namespace cocoa {

struct ZernikeIndex {
    int n = 0;  // radial order
    int m = 0;  // azimuthal frequency, sign selects cos (m>0) / sin (m<0)

    friend bool operator==(const ZernikeIndex&, const ZernikeIndex&) = default;
};

[[nodiscard]] bool zernike_valid(ZernikeIndex nm);

// ANSI j = (n(n+2) + m) / 2; inverse recovers (n, m). Invalid input throws.
int ansi_index(ZernikeIndex nm);
ZernikeIndex from_ansi(int j);

// Orthonormal mode value at polar point (ρ in [0,1], θ).
// Normalization N = sqrt(2(n+1)/(1+[m==0])) gives unit RMS over the disk.
double zernike_at(ZernikeIndex nm, double rho, double theta);

// Sparse coefficient vector keyed by ANSI index (λ units).
struct WavefrontAberration {
    std::map<int, double> coeffs;

    WavefrontAberration() = default;
    explicit WavefrontAberration(std::map<int, double> c);

    [[nodiscard]] double rms() const;  // l2 of coefficients (orthonormal basis)
    [[nodiscard]] double get(int j) const;
    void set(int j, double value);

    [[nodiscard]] WavefrontAberration negated() const;
    [[nodiscard]] WavefrontAberration plus(const WavefrontAberration& other) const;
};

// The 17-mode estimation basis: every mode from radial order 2 through 5
// except defocus (ANSI j in {3,5} ∪ {6..20}). Defocus is excluded because
// an axial shift of the structure reproduces it.
std::vector<int> default_mode_set();
std::vector<int> low_order_modes();   // radial order 2..4, defocus excluded
std::vector<int> high_order_modes();  // radial order 5

// Uniform random coefficients on `modes`, rescaled so the l2 norm equals
// rms_target exactly. Defocus in `modes` is rejected.
WavefrontAberration random_mixed_aberration(double rms_target, const std::vector<int>& modes,
                                            Rng& rng);

}  // namespace cocoa
