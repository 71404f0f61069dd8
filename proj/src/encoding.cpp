#include "cocoa/encoding.hpp"

#include <algorithm>
#include <cmath>

namespace cocoa {

namespace {

std::vector<double> ladder(int n, double base, double max, EncodingSpec::Spacing spacing) {
    std::vector<double> f(n);
    if (n == 1) {
        f[0] = base;
        return f;
    }
    for (int k = 0; k < n; ++k) {
        double t = static_cast<double>(k) / (n - 1);
        f[k] = spacing == EncodingSpec::Spacing::geometric ? base * std::pow(max / base, t)
                                                           : base + t * (max - base);
    }
    return f;
}

}  // namespace

EncodingSpec EncodingSpec::for_grid(Shape3 grid) {
    EncodingSpec s;
    s.radial_max = std::max(s.radial_base, std::max(grid.nx, grid.ny) / 8.0);
    s.axial_max = std::max(s.axial_base, grid.nz / 8.0);
    // Degenerate ladders (max == base) would repeat frequencies; shrink the
    // ladder instead so it stays strictly increasing.
    if (s.radial_max == s.radial_base) s.n_radial = 1;
    if (s.axial_max == s.axial_base) s.n_axial = 1;
    return s;
}

void EncodingSpec::validate() const {
    if (n_radial < 0 || n_axial < 0) throw ConfigError("encoding ladder sizes must be >= 0");
    if (n_radial > 0 && !(radial_base > 0.0)) throw ConfigError("radial base must be positive");
    if (n_axial > 0 && !(axial_base > 0.0)) throw ConfigError("axial base must be positive");
    if (n_radial > 1 && !(radial_max > radial_base))
        throw ConfigError("radial frequencies must be strictly increasing");
    if (n_axial > 1 && !(axial_max > axial_base))
        throw ConfigError("axial frequencies must be strictly increasing");
    if (dim() == 0) throw ConfigError("encoding is empty");
}

std::vector<double> EncodingSpec::radial_frequencies() const {
    return ladder(n_radial, radial_base, radial_max, spacing);
}

std::vector<double> EncodingSpec::axial_frequencies() const {
    return ladder(n_axial, axial_base, axial_max, spacing);
}

double normalized_coord(int i, int n) {
    return (2.0 * i + 1.0 - n) / n;
}

void encode(const EncodingSpec& spec, const double* xyz, std::size_t n_points, double* out) {
    spec.validate();
    const auto fr = spec.radial_frequencies();
    const auto fz = spec.axial_frequencies();
    const int dim = spec.dim();
    for (std::size_t p = 0; p < n_points; ++p) {
        const double x = xyz[3 * p], y = xyz[3 * p + 1], z = xyz[3 * p + 2];
        const double rho = std::sqrt(x * x + y * y);
        double* row = out + p * dim;
        for (std::size_t k = 0; k < fr.size(); ++k) {
            double a = 2.0 * M_PI * fr[k] * rho;
            *row++ = std::sin(a);
            *row++ = std::cos(a);
        }
        for (std::size_t k = 0; k < fz.size(); ++k) {
            double a = 2.0 * M_PI * fz[k] * z;
            *row++ = std::sin(a);
            *row++ = std::cos(a);
        }
        if (spec.include_raw) {
            *row++ = x;
            *row++ = y;
            *row++ = z;
        }
    }
}

}  // namespace cocoa
