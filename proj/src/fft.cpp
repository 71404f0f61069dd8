#include "cocoa/fft.hpp"

#include <fftw3.h>

#include <array>
#include <cstring>
#include <map>
#include <mutex>

namespace cocoa::fft {

namespace {

// One cached plan per (dims, direction), with plan-owned aligned buffers.
// fftw_execute on a plan's own buffers is always valid; input is copied in
// and out around the call. The mutex guards both planning and execution,
// which keeps FFTW usage trivially thread-safe.
struct PlanEntry {
    fftw_plan plan = nullptr;
    fftw_complex* in = nullptr;
    fftw_complex* out = nullptr;
    std::size_t n = 0;
};

std::mutex& cache_mutex() {
    static std::mutex m;
    return m;
}

using Key = std::array<int, 4>;  // nz, ny, nx, sign

PlanEntry& get_plan(Key key) {
    static std::map<Key, PlanEntry> cache;
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    PlanEntry e;
    auto [nz, ny, nx, sign] = key;
    e.n = static_cast<std::size_t>(nz ? nz : 1) * ny * nx;
    e.in = fftw_alloc_complex(e.n);
    e.out = fftw_alloc_complex(e.n);
    if (nz == 0)
        e.plan = fftw_plan_dft_2d(ny, nx, e.in, e.out, sign, FFTW_ESTIMATE);
    else
        e.plan = fftw_plan_dft_3d(nz, ny, nx, e.in, e.out, sign, FFTW_ESTIMATE);
    if (!e.plan) throw NumericalError("fftw planning failed");
    return cache.emplace(key, e).first->second;
}

void run(Key key, const std::complex<double>* in, std::complex<double>* out) {
    std::lock_guard<std::mutex> lock(cache_mutex());
    PlanEntry& e = get_plan(key);
    std::memcpy(e.in, in, e.n * sizeof(fftw_complex));
    fftw_execute(e.plan);
    std::memcpy(out, e.out, e.n * sizeof(fftw_complex));
}

}  // namespace

void forward2d(int ny, int nx, const std::complex<double>* in, std::complex<double>* out) {
    run({0, ny, nx, FFTW_FORWARD}, in, out);
}

void backward2d(int ny, int nx, const std::complex<double>* in, std::complex<double>* out) {
    run({0, ny, nx, FFTW_BACKWARD}, in, out);
}

void forward3d(Shape3 s, const std::complex<double>* in, std::complex<double>* out) {
    run({s.nz, s.ny, s.nx, FFTW_FORWARD}, in, out);
}

void backward3d(Shape3 s, const std::complex<double>* in, std::complex<double>* out) {
    run({s.nz, s.ny, s.nx, FFTW_BACKWARD}, in, out);
}

int next_fast_size(int n) {
    auto smooth = [](int v) {
        for (int p : {2, 3, 5, 7})
            while (v % p == 0) v /= p;
        return v == 1;
    };
    while (!smooth(n)) ++n;
    return n;
}

void fftshift2d(int ny, int nx, const double* in, double* out) {
    int cy = ny / 2, cx = nx / 2;
    for (int y = 0; y < ny; ++y) {
        int yy = (y + cy) % ny;
        for (int x = 0; x < nx; ++x) out[yy * nx + (x + cx) % nx] = in[y * nx + x];
    }
}

void ifftshift2d(int ny, int nx, const double* in, double* out) {
    int cy = ny / 2, cx = nx / 2;
    for (int y = 0; y < ny; ++y) {
        int yy = (y + cy) % ny;
        for (int x = 0; x < nx; ++x) out[y * nx + x] = in[yy * nx + (x + cx) % nx];
    }
}

}  // namespace cocoa::fft
