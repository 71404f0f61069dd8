#pragma once

// Linear (zero-padded) FFT convolution of a structure with a PSF, cropped
// so the PSF center voxel (n/2 per axis, matching the shift-centered PSF)
// maps to zero displacement. The output FOV may be smaller than the
// structure grid: the margin is split evenly per side, which is how a
// structure-domain halo absorbs edge sources during estimation.
//
// Exact adjoints of the same padded/cropped linear map are provided for
// both arguments; these are what the optimizer differentiates through.

#include <complex>
#include <vector>

#include "cocoa/types.hpp"

namespace cocoa {

struct ConvGeometry {
    Shape3 s{}, h{}, out{}, pad{};
    int cz = 0, cy = 0, cx = 0;  // crop window origin in full-convolution coords

    static ConvGeometry make(Shape3 s, Shape3 h, Shape3 out);  // throws ShapeError
};

// Convolution with a fixed kernel: the kernel spectrum is cached, so each
// forward/adjoint costs two FFTs. Used by Richardson-Lucy.
class ConvOp {
public:
    ConvOp(const Volume& kernel, Shape3 s_shape, Shape3 out_shape);

    [[nodiscard]] Volume forward(const Volume& s) const;
    [[nodiscard]] Volume adjoint(const Volume& gy) const;  // w.r.t. the structure
    [[nodiscard]] const ConvGeometry& geometry() const { return geo_; }

private:
    ConvGeometry geo_;
    std::vector<std::complex<double>> kernel_hat_;
};

// Joint-gradient workspace for one (structure, kernel) pair per iteration:
// forward() retains both spectra, backward() pulls dL/dout back to both
// arguments sharing a single FFT of the upstream gradient.
class ConvPair {
public:
    ConvPair(Shape3 s_shape, Shape3 h_shape, Shape3 out_shape);

    Volume forward(const Volume& s, const Volume& h);
    void backward(const Volume& gy, Volume* grad_s, Volume* grad_h) const;

private:
    ConvGeometry geo_;
    std::vector<std::complex<double>> s_hat_, h_hat_;
};

// One-shot conveniences.
Volume convolve_3d(const Volume& s, const Volume& h, Shape3 out_shape);
Volume convolve_adjoint_structure(const Volume& gy, const Volume& h, Shape3 s_shape);
Volume convolve_adjoint_psf(const Volume& gy, const Volume& s, Shape3 h_shape);

}  // namespace cocoa
