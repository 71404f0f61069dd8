#include "cocoa/conv.hpp"

#include "cocoa/fft.hpp"

namespace cocoa {

namespace {

using cvec = std::vector<std::complex<double>>;

// Zero-embed a real block into the padded complex grid at offset (oz,oy,ox).
cvec embed(const Volume& v, Shape3 pad, int oz, int oy, int ox) {
    cvec out(pad.size(), 0.0);
    for (int z = 0; z < v.shape.nz; ++z)
        for (int y = 0; y < v.shape.ny; ++y) {
            const double* src = v.data.data() + v.idx(z, y, 0);
            std::complex<double>* dst =
                out.data() + (static_cast<std::size_t>(z + oz) * pad.ny + (y + oy)) * pad.nx + ox;
            for (int x = 0; x < v.shape.nx; ++x) dst[x] = src[x];
        }
    return out;
}

// Read the real part of a padded-grid window back out.
Volume extract(const cvec& grid, Shape3 pad, Shape3 shape, int oz, int oy, int ox, double scale) {
    Volume out(shape);
    for (int z = 0; z < shape.nz; ++z)
        for (int y = 0; y < shape.ny; ++y) {
            const std::complex<double>* src =
                grid.data() + (static_cast<std::size_t>(z + oz) * pad.ny + (y + oy)) * pad.nx + ox;
            double* dst = out.data.data() + out.idx(z, y, 0);
            for (int x = 0; x < shape.nx; ++x) dst[x] = src[x].real() * scale;
        }
    return out;
}

cvec spectrum(const Volume& v, Shape3 pad, int oz = 0, int oy = 0, int ox = 0) {
    cvec g = embed(v, pad, oz, oy, ox);
    cvec out(g.size());
    fft::forward3d(pad, g.data(), out.data());
    return out;
}

}  // namespace

ConvGeometry ConvGeometry::make(Shape3 s, Shape3 h, Shape3 out) {
    if (out.nz > s.nz || out.ny > s.ny || out.nx > s.nx)
        throw ShapeError("convolution output cannot exceed the structure grid");
    if ((s.nz - out.nz) % 2 || (s.ny - out.ny) % 2 || (s.nx - out.nx) % 2)
        throw ShapeError("structure margin must be even (same halo on both sides)");
    if (!s.size() || !h.size() || !out.size()) throw ShapeError("empty convolution operand");
    ConvGeometry g;
    g.s = s;
    g.h = h;
    g.out = out;
    g.pad = {fft::next_fast_size(s.nz + h.nz - 1), fft::next_fast_size(s.ny + h.ny - 1),
             fft::next_fast_size(s.nx + h.nx - 1)};
    g.cz = h.nz / 2 + (s.nz - out.nz) / 2;
    g.cy = h.ny / 2 + (s.ny - out.ny) / 2;
    g.cx = h.nx / 2 + (s.nx - out.nx) / 2;
    return g;
}

ConvOp::ConvOp(const Volume& kernel, Shape3 s_shape, Shape3 out_shape)
    : geo_(ConvGeometry::make(s_shape, kernel.shape, out_shape)),
      kernel_hat_(spectrum(kernel, geo_.pad)) {}

Volume ConvOp::forward(const Volume& s) const {
    require_shape(s, geo_.s, "ConvOp::forward");
    cvec S = spectrum(s, geo_.pad);
    for (std::size_t i = 0; i < S.size(); ++i) S[i] *= kernel_hat_[i];
    cvec y(S.size());
    fft::backward3d(geo_.pad, S.data(), y.data());
    return extract(y, geo_.pad, geo_.out, geo_.cz, geo_.cy, geo_.cx,
                   1.0 / static_cast<double>(geo_.pad.size()));
}

Volume ConvOp::adjoint(const Volume& gy) const {
    require_shape(gy, geo_.out, "ConvOp::adjoint");
    cvec G = spectrum(gy, geo_.pad, geo_.cz, geo_.cy, geo_.cx);
    for (std::size_t i = 0; i < G.size(); ++i) G[i] *= std::conj(kernel_hat_[i]);
    cvec y(G.size());
    fft::backward3d(geo_.pad, G.data(), y.data());
    return extract(y, geo_.pad, geo_.s, 0, 0, 0, 1.0 / static_cast<double>(geo_.pad.size()));
}

ConvPair::ConvPair(Shape3 s_shape, Shape3 h_shape, Shape3 out_shape)
    : geo_(ConvGeometry::make(s_shape, h_shape, out_shape)) {}

Volume ConvPair::forward(const Volume& s, const Volume& h) {
    require_shape(s, geo_.s, "ConvPair structure");
    require_shape(h, geo_.h, "ConvPair kernel");
    s_hat_ = spectrum(s, geo_.pad);
    h_hat_ = spectrum(h, geo_.pad);
    cvec prod(s_hat_.size());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = s_hat_[i] * h_hat_[i];
    cvec y(prod.size());
    fft::backward3d(geo_.pad, prod.data(), y.data());
    return extract(y, geo_.pad, geo_.out, geo_.cz, geo_.cy, geo_.cx,
                   1.0 / static_cast<double>(geo_.pad.size()));
}

void ConvPair::backward(const Volume& gy, Volume* grad_s, Volume* grad_h) const {
    require_shape(gy, geo_.out, "ConvPair::backward");
    if (s_hat_.empty()) throw NumericalError("ConvPair::backward before forward");
    cvec G = spectrum(gy, geo_.pad, geo_.cz, geo_.cy, geo_.cx);
    const double inv = 1.0 / static_cast<double>(geo_.pad.size());
    cvec tmp(G.size()), y(G.size());
    if (grad_s) {
        for (std::size_t i = 0; i < G.size(); ++i) tmp[i] = std::conj(h_hat_[i]) * G[i];
        fft::backward3d(geo_.pad, tmp.data(), y.data());
        *grad_s = extract(y, geo_.pad, geo_.s, 0, 0, 0, inv);
    }
    if (grad_h) {
        for (std::size_t i = 0; i < G.size(); ++i) tmp[i] = std::conj(s_hat_[i]) * G[i];
        fft::backward3d(geo_.pad, tmp.data(), y.data());
        *grad_h = extract(y, geo_.pad, geo_.h, 0, 0, 0, inv);
    }
}

Volume convolve_3d(const Volume& s, const Volume& h, Shape3 out_shape) {
    ConvPair op(s.shape, h.shape, out_shape);
    return op.forward(s, h);
}

Volume convolve_adjoint_structure(const Volume& gy, const Volume& h, Shape3 s_shape) {
    ConvOp op(h, s_shape, gy.shape);
    return op.adjoint(gy);
}

Volume convolve_adjoint_psf(const Volume& gy, const Volume& s, Shape3 h_shape) {
    ConvGeometry geo = ConvGeometry::make(s.shape, h_shape, gy.shape);
    cvec S = spectrum(s, geo.pad);
    cvec G = spectrum(gy, geo.pad, geo.cz, geo.cy, geo.cx);
    for (std::size_t i = 0; i < G.size(); ++i) G[i] *= std::conj(S[i]);
    cvec y(G.size());
    fft::backward3d(geo.pad, G.data(), y.data());
    return extract(y, geo.pad, geo.h, 0, 0, 0, 1.0 / static_cast<double>(geo.pad.size()));
}

}  // namespace cocoa
