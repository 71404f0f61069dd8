#pragma once

// Shared value types: dense 3-D volumes in [z][y][x] raster order, voxel
// pitches in micrometers, and the error taxonomy thrown at module borders.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cocoa {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error { using Error::Error; };      // rejected user configuration
struct ShapeError : Error { using Error::Error; };       // mismatched grid dimensions
struct DomainError : Error { using Error::Error; };      // value outside the mathematical domain
struct InputError : Error { using Error::Error; };       // data rejected after inspection
struct IoError : Error { using Error::Error; };          // filesystem / file-format problems
struct NumericalError : Error { using Error::Error; };   // non-finite values or failed convergence
struct GenerationError : Error { using Error::Error; };  // synthetic data could not be produced

struct Shape3 {
    int nz = 0, ny = 0, nx = 0;

    friend bool operator==(const Shape3&, const Shape3&) = default;
    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(nz) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nx);
    }
    [[nodiscard]] std::string str() const;
};

// Voxel pitches in micrometers.
struct Pitches {
    double dz = 0.25, dy = 0.1, dx = 0.1;
    friend bool operator==(const Pitches&, const Pitches&) = default;
};

// Dense real-valued volume, contiguous [z][y][x].
struct Volume {
    Shape3 shape{};
    std::vector<double> data;

    Volume() = default;
    explicit Volume(Shape3 s, double fill = 0.0) : shape(s), data(s.size(), fill) {}

    [[nodiscard]] std::size_t idx(int z, int y, int x) const {
        return (static_cast<std::size_t>(z) * shape.ny + y) * shape.nx + x;
    }
    double& at(int z, int y, int x) { return data[idx(z, y, x)]; }
    [[nodiscard]] double at(int z, int y, int x) const { return data[idx(z, y, x)]; }
    [[nodiscard]] std::size_t size() const { return data.size(); }

    // 2-D plane view helpers (plane z is a contiguous ny*nx block).
    double* plane(int z) { return data.data() + static_cast<std::size_t>(z) * shape.ny * shape.nx; }
    [[nodiscard]] const double* plane(int z) const {
        return data.data() + static_cast<std::size_t>(z) * shape.ny * shape.nx;
    }
};

double vmin(const Volume& v);
double vmax(const Volume& v);
double vsum(const Volume& v);
double vmean(const Volume& v);
bool all_finite(const Volume& v);
void require_shape(const Volume& v, Shape3 expect, const char* what);

// 3-D structure in expected-photon (or arbitrary intensity) units.
struct Structure3D {
    Volume vol;
    Pitches pitch{};
};

// Camera image stack: pixel values plus acquisition metadata.
struct ImageStack {
    Volume vol;
    Pitches pitch{};
    double gain = 1.0;     // β, pixel values per photon
    double readout = 0.0;  // n_r, pixel-value std of dark frames
};

}  // namespace cocoa
