#include "cocoa/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "cocoa/rng.hpp"

namespace cocoa {

namespace {

struct Vec3 {
    double z, y, x;
};

double dist2(Vec3 a, Vec3 b) {
    double dz = a.z - b.z, dy = a.y - b.y, dx = a.x - b.x;
    return dz * dz + dy * dy + dx * dx;
}

// Antialiased sphere stamp: per voxel coverage from an s³ subsample grid in
// physical (µm) coordinates; composited with max() so overlapping stamps do
// not exceed `brightness`.
void stamp_sphere(Volume& vol, Pitches pitch, Vec3 c, double radius, double brightness, int s) {
    const double r2 = radius * radius;
    int z0 = std::max(0, static_cast<int>(std::floor((c.z - radius) / pitch.dz)));
    int z1 = std::min(vol.shape.nz - 1, static_cast<int>(std::ceil((c.z + radius) / pitch.dz)));
    int y0 = std::max(0, static_cast<int>(std::floor((c.y - radius) / pitch.dy)));
    int y1 = std::min(vol.shape.ny - 1, static_cast<int>(std::ceil((c.y + radius) / pitch.dy)));
    int x0 = std::max(0, static_cast<int>(std::floor((c.x - radius) / pitch.dx)));
    int x1 = std::min(vol.shape.nx - 1, static_cast<int>(std::ceil((c.x + radius) / pitch.dx)));
    const double inv = 1.0 / (s * s * s);
    for (int z = z0; z <= z1; ++z)
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                int hits = 0;
                for (int a = 0; a < s; ++a)
                    for (int b = 0; b < s; ++b)
                        for (int d = 0; d < s; ++d) {
                            Vec3 p{(z + (a + 0.5) / s) * pitch.dz, (y + (b + 0.5) / s) * pitch.dy,
                                   (x + (d + 0.5) / s) * pitch.dx};
                            if (dist2(p, c) <= r2) ++hits;
                        }
                if (hits) {
                    double v = brightness * hits * inv;
                    double& cell = vol.at(z, y, x);
                    cell = std::max(cell, v);
                }
            }
}

Structure3D make_beads(const PhantomSpec& spec, Rng& rng) {
    const double ez = spec.shape.nz * spec.pitch.dz;
    const double ey = spec.shape.ny * spec.pitch.dy;
    const double ex = spec.shape.nx * spec.pitch.dx;
    const double r = spec.bead_radius;
    if (2.0 * r >= std::min({ez, ey, ex}))
        throw ConfigError("bead diameter exceeds the field of view");

    const double bead_volume = 4.0 / 3.0 * M_PI * r * r * r;
    long count = spec.bead_count >= 0
                     ? spec.bead_count
                     : std::max<long>(1, std::lround(spec.volume_fraction * ez * ey * ex /
                                                     bead_volume));
    std::vector<Vec3> centers;
    centers.reserve(count);
    const long max_attempts = 1000 * std::max<long>(count, 1);
    long attempts = 0;
    while (static_cast<long>(centers.size()) < count) {
        if (++attempts > max_attempts)
            throw GenerationError("could not place " + std::to_string(count) +
                                  " non-overlapping beads (placed " +
                                  std::to_string(centers.size()) + ")");
        Vec3 c{rng.uniform(r, ez - r), rng.uniform(r, ey - r), rng.uniform(r, ex - r)};
        bool clear = std::all_of(centers.begin(), centers.end(),
                                 [&](Vec3 o) { return dist2(c, o) >= 4.0 * r * r; });
        if (clear) centers.push_back(c);
    }

    Structure3D out;
    out.vol = Volume(spec.shape);
    out.pitch = spec.pitch;
    for (Vec3 c : centers) stamp_sphere(out.vol, spec.pitch, c, r, spec.brightness, 3);
    return out;
}

Vec3 random_unit(Rng& rng) {
    for (;;) {
        Vec3 v{rng.normal(), rng.normal(), rng.normal()};
        double n = std::sqrt(dist2(v, {0, 0, 0}));
        if (n > 1e-12) return {v.z / n, v.y / n, v.x / n};
    }
}

Structure3D make_filaments(const PhantomSpec& spec, Rng& rng) {
    const double ez = spec.shape.nz * spec.pitch.dz;
    const double ey = spec.shape.ny * spec.pitch.dy;
    const double ex = spec.shape.nx * spec.pitch.dx;
    const double r = spec.filament_radius;
    if (spec.filament_count < 1) throw ConfigError("filament_count must be >= 1");
    if (2.0 * r >= std::min({ez, ey, ex}))
        throw ConfigError("filament diameter exceeds the field of view");

    Structure3D out;
    out.vol = Volume(spec.shape);
    out.pitch = spec.pitch;

    const double step = 0.5 * std::min({spec.pitch.dz, spec.pitch.dy, spec.pitch.dx, r});
    const double length = 1.2 * std::max({ez, ey, ex});
    const double curvature = 0.8;  // direction diffusion per µm^(1/2)

    auto walk = [&](Vec3 p, Vec3 dir, double len, double radius) {
        for (double t = 0.0; t < len; t += step) {
            stamp_sphere(out.vol, spec.pitch, p, radius, spec.brightness, 2);
            Vec3 jitter = random_unit(rng);
            double k = curvature * std::sqrt(step);
            dir = {dir.z + k * jitter.z, dir.y + k * jitter.y, dir.x + k * jitter.x};
            double n = std::sqrt(dist2(dir, {0, 0, 0}));
            dir = {dir.z / n, dir.y / n, dir.x / n};
            p = {p.z + dir.z * step, p.y + dir.y * step, p.x + dir.x * step};
            // reflect at the walls, keeping the tube inside
            if (p.z < r || p.z > ez - r) { dir.z = -dir.z; p.z = std::clamp(p.z, r, ez - r); }
            if (p.y < r || p.y > ey - r) { dir.y = -dir.y; p.y = std::clamp(p.y, r, ey - r); }
            if (p.x < r || p.x > ex - r) { dir.x = -dir.x; p.x = std::clamp(p.x, r, ex - r); }
            if (spec.protrusion_rate > 0.0 && radius == r &&
                rng.uniform() < spec.protrusion_rate * step) {
                Vec3 side = random_unit(rng);
                double blen = rng.uniform(0.3, 0.8);
                Vec3 q = p;
                for (double s = 0.0; s < blen; s += step) {
                    q = {q.z + side.z * step, q.y + side.y * step, q.x + side.x * step};
                    if (q.z < 0 || q.z > ez || q.y < 0 || q.y > ey || q.x < 0 || q.x > ex) break;
                    stamp_sphere(out.vol, spec.pitch, q, 0.6 * r, spec.brightness, 2);
                }
            }
        }
    };

    for (int f = 0; f < spec.filament_count; ++f) {
        Vec3 start{rng.uniform(r, ez - r), rng.uniform(r, ey - r), rng.uniform(r, ex - r)};
        walk(start, random_unit(rng), length, r);
    }
    if (vmax(out.vol) <= 0.0) throw GenerationError("filament phantom came out empty");
    return out;
}

}  // namespace

Structure3D make_phantom(const PhantomSpec& spec) {
    if (!(spec.brightness > 0.0)) throw ConfigError("brightness must be positive");
    if (spec.shape.nz < 1 || spec.shape.ny < 1 || spec.shape.nx < 1)
        throw ConfigError("phantom grid must be non-empty");
    if (!(spec.pitch.dz > 0.0 && spec.pitch.dy > 0.0 && spec.pitch.dx > 0.0))
        throw ConfigError("phantom pitches must be positive");
    Rng rng(spec.seed);
    switch (spec.kind) {
        case PhantomSpec::Kind::beads: {
            if (!(spec.bead_radius > 0.0)) throw ConfigError("bead_radius must be positive");
            if (spec.bead_count < 0 && !(spec.volume_fraction > 0.0))
                throw ConfigError("volume_fraction must be positive");
            return make_beads(spec, rng);
        }
        case PhantomSpec::Kind::filaments:
            return make_filaments(spec, rng);
    }
    throw ConfigError("unknown phantom kind");
}

}  // namespace cocoa
