#pragma once

// FFTW wrapper: cached FFTW_ESTIMATE plans (deterministic, no measurement),
// complex<double> in/out, FFTW's unnormalized conventions (forward kernel
// e^{-2πi}, backward e^{+2πi}, no 1/N anywhere). Calls are serialized by an
// internal plan-cache mutex; transforms themselves are single-threaded.

#include <complex>
#include <vector>

#include "cocoa/types.hpp"

namespace cocoa::fft {

using cvec = std::vector<std::complex<double>>;

void forward2d(int ny, int nx, const std::complex<double>* in, std::complex<double>* out);
void backward2d(int ny, int nx, const std::complex<double>* in, std::complex<double>* out);
void forward3d(Shape3 s, const std::complex<double>* in, std::complex<double>* out);
void backward3d(Shape3 s, const std::complex<double>* in, std::complex<double>* out);

// Smallest size >= n whose factors are all in {2,3,5,7}; FFTW stays fast
// (and exact O(n log n)) on these.
int next_fast_size(int n);

// Centered-origin remaps: fftshift moves index 0 to n/2, ifftshift inverts.
// Defined per axis as out[(i + n/2) % n] = in[i].
void fftshift2d(int ny, int nx, const double* in, double* out);
void ifftshift2d(int ny, int nx, const double* in, double* out);

}  // namespace cocoa::fft
