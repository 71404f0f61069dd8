#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "cocoa/conv.hpp"
#include "cocoa/fft.hpp"
#include "cocoa/rng.hpp"

using namespace cocoa;

namespace {

Volume random_volume(Shape3 s, std::uint64_t seed) {
    Volume v(s);
    Rng rng(seed);
    for (double& x : v.data) x = rng.uniform(-1.0, 1.0);
    return v;
}

// Reference linear convolution: full support, then crop at the geometry's
// window origin. Independent of the FFT path.
Volume direct_convolve(const Volume& s, const Volume& h, Shape3 out) {
    const ConvGeometry geo = ConvGeometry::make(s.shape, h.shape, out);
    const Shape3 full{s.shape.nz + h.shape.nz - 1, s.shape.ny + h.shape.ny - 1,
                      s.shape.nx + h.shape.nx - 1};
    Volume acc(full);
    for (int sz = 0; sz < s.shape.nz; ++sz)
        for (int sy = 0; sy < s.shape.ny; ++sy)
            for (int sx = 0; sx < s.shape.nx; ++sx) {
                const double sv = s.at(sz, sy, sx);
                for (int hz = 0; hz < h.shape.nz; ++hz)
                    for (int hy = 0; hy < h.shape.ny; ++hy)
                        for (int hx = 0; hx < h.shape.nx; ++hx)
                            acc.at(sz + hz, sy + hy, sx + hx) += sv * h.at(hz, hy, hx);
            }
    Volume res(out);
    for (int z = 0; z < out.nz; ++z)
        for (int y = 0; y < out.ny; ++y)
            for (int x = 0; x < out.nx; ++x)
                res.at(z, y, x) = acc.at(z + geo.cz, y + geo.cy, x + geo.cx);
    return res;
}

double dot(const Volume& a, const Volume& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

}  // namespace

TEST_SUITE("conv") {

TEST_CASE("fast sizes are the next 7-smooth integers") {
    CHECK(fft::next_fast_size(1) == 1);
    CHECK(fft::next_fast_size(11) == 12);
    CHECK(fft::next_fast_size(13) == 14);
    CHECK(fft::next_fast_size(17) == 18);
    CHECK(fft::next_fast_size(31) == 32);
    CHECK(fft::next_fast_size(97) == 98);
    CHECK(fft::next_fast_size(121) == 125);
}

TEST_CASE("transform round-trip carries the unnormalized factor N") {
    const int ny = 6, nx = 10;
    std::vector<std::complex<double>> x(static_cast<std::size_t>(ny) * nx), f(x.size()),
        back(x.size());
    Rng rng(3);
    for (auto& v : x) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    fft::forward2d(ny, nx, x.data(), f.data());
    fft::backward2d(ny, nx, f.data(), back.data());
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(back[i].real() == doctest::Approx(n * x[i].real()).epsilon(1e-12));
        CHECK(back[i].imag() == doctest::Approx(n * x[i].imag()).epsilon(1e-12));
    }
}

TEST_CASE("shift remaps move the origin to the center and invert") {
    const int ny = 4, nx = 6;
    std::vector<double> in(static_cast<std::size_t>(ny) * nx), mid(in.size()), out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = static_cast<double>(i);
    fft::fftshift2d(ny, nx, in.data(), mid.data());
    CHECK(mid[static_cast<std::size_t>(ny / 2) * nx + nx / 2] == in[0]);
    fft::ifftshift2d(ny, nx, mid.data(), out.data());
    CHECK(out == in);
}

TEST_CASE("FFT convolution equals the direct sum") {
    const Volume s = random_volume({3, 5, 5}, 11);
    const Volume h = random_volume({3, 3, 3}, 12);
    for (const Shape3 out : {Shape3{3, 5, 5}, Shape3{1, 3, 3}}) {
        const Volume fast = convolve_3d(s, h, out);
        const Volume ref = direct_convolve(s, h, out);
        double scale = 0.0;
        for (double v : ref.data) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < ref.data.size(); ++i)
            CHECK(std::abs(fast.data[i] - ref.data[i]) < 1e-10 * scale);
    }
}

TEST_CASE("a centered delta reproduces the centered kernel") {
    const Shape3 shape{5, 8, 8};
    Volume delta(shape);
    delta.at(shape.nz / 2, shape.ny / 2, shape.nx / 2) = 1.0;
    const Volume h = random_volume(shape, 5);
    const Volume out = convolve_3d(delta, h, shape);
    for (std::size_t i = 0; i < h.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(h.data[i]).epsilon(1e-10));
}

TEST_CASE("adjoints satisfy the inner-product identity") {
    const Shape3 s_shape{4, 7, 6}, h_shape{3, 5, 5}, out_shape{2, 6, 5};
    const Volume s = random_volume(s_shape, 21);
    const Volume h = random_volume(h_shape, 22);
    const Volume gy = random_volume(out_shape, 23);

    const Volume y = convolve_3d(s, h, out_shape);
    const Volume gs = convolve_adjoint_structure(gy, h, s_shape);
    const Volume gh = convolve_adjoint_psf(gy, s, h_shape);

    const double lhs = dot(y, gy);
    CHECK(dot(s, gs) == doctest::Approx(lhs).epsilon(1e-8));
    CHECK(dot(h, gh) == doctest::Approx(lhs).epsilon(1e-8));
}

TEST_CASE("the pair workspace matches the one-shot operations") {
    const Shape3 s_shape{4, 6, 6}, h_shape{3, 6, 6}, out_shape{3, 4, 4};
    const Volume s = random_volume(s_shape, 31);
    const Volume h = random_volume(h_shape, 32);
    const Volume gy = random_volume(out_shape, 33);

    ConvPair pair(s_shape, h_shape, out_shape);
    const Volume y = pair.forward(s, h);
    const Volume y_ref = convolve_3d(s, h, out_shape);
    for (std::size_t i = 0; i < y.data.size(); ++i)
        CHECK(y.data[i] == doctest::Approx(y_ref.data[i]).epsilon(1e-10));

    Volume gs, gh;
    pair.backward(gy, &gs, &gh);
    const Volume gs_ref = convolve_adjoint_structure(gy, h, s_shape);
    const Volume gh_ref = convolve_adjoint_psf(gy, s, h_shape);
    for (std::size_t i = 0; i < gs.data.size(); ++i)
        CHECK(gs.data[i] == doctest::Approx(gs_ref.data[i]).epsilon(1e-9));
    for (std::size_t i = 0; i < gh.data.size(); ++i)
        CHECK(gh.data[i] == doctest::Approx(gh_ref.data[i]).epsilon(1e-9));
}

TEST_CASE("cached-kernel operator matches and validates shapes") {
    const Shape3 s_shape{3, 6, 6}, out_shape{3, 6, 6};
    const Volume s = random_volume(s_shape, 41);
    const Volume h = random_volume({3, 3, 3}, 42);
    ConvOp op(h, s_shape, out_shape);
    const Volume y = op.forward(s);
    const Volume y_ref = convolve_3d(s, h, out_shape);
    for (std::size_t i = 0; i < y.data.size(); ++i)
        CHECK(y.data[i] == doctest::Approx(y_ref.data[i]).epsilon(1e-10));

    // Output larger than the full convolution support is rejected.
    CHECK_THROWS_AS(ConvGeometry::make({2, 2, 2}, {2, 2, 2}, {8, 8, 8}), ShapeError);
}

}  // TEST_SUITE
