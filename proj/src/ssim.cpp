#include "cocoa/ssim.hpp"

#include <cmath>

namespace cocoa {

namespace {

std::vector<double> gaussian_kernel(int w, double sigma) {
    std::vector<double> k(w);
    double c = (w - 1) / 2.0, s = 0.0;
    for (int i = 0; i < w; ++i) {
        k[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        s += k[i];
    }
    for (double& v : k) v /= s;
    return k;
}

// Valid-mode separable correlation: out is (ny-w+1)×(nx-w+1).
void filt_valid(const double* in, int ny, int nx, const std::vector<double>& k, double* out,
                std::vector<double>& tmp) {
    const int w = static_cast<int>(k.size());
    const int vx = nx - w + 1, vy = ny - w + 1;
    tmp.assign(static_cast<std::size_t>(ny) * vx, 0.0);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < vx; ++x) {
            double acc = 0.0;
            for (int t = 0; t < w; ++t) acc += in[y * nx + x + t] * k[t];
            tmp[y * vx + x] = acc;
        }
    for (int y = 0; y < vy; ++y)
        for (int x = 0; x < vx; ++x) {
            double acc = 0.0;
            for (int t = 0; t < w; ++t) acc += tmp[(y + t) * vx + x] * k[t];
            out[y * vx + x] = acc;
        }
}

// Exact adjoint of filt_valid: scatter valid-grid values back to the full
// plane through the same separable kernel. Accumulates into `out`.
void filt_valid_adjoint(const double* g, int ny, int nx, const std::vector<double>& k,
                        double* out, std::vector<double>& tmp) {
    const int w = static_cast<int>(k.size());
    const int vx = nx - w + 1, vy = ny - w + 1;
    tmp.assign(static_cast<std::size_t>(ny) * vx, 0.0);
    for (int y = 0; y < vy; ++y)
        for (int x = 0; x < vx; ++x) {
            const double gv = g[y * vx + x];
            for (int t = 0; t < w; ++t) tmp[(y + t) * vx + x] += gv * k[t];
        }
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < vx; ++x) {
            const double tv = tmp[y * vx + x];
            for (int t = 0; t < w; ++t) out[y * nx + x + t] += tv * k[t];
        }
}

struct PlaneBuffers {
    std::vector<double> mx, my, mxx, myy, mxy, x2, y2, xy, tmp;
    std::vector<double> gmu, gsxx, gsxy;
};

}  // namespace

static double ssim_plane(const double* x, const double* y, int ny, int nx, const SsimSpec& spec,
                         const std::vector<double>& k, PlaneBuffers& B, double* grad_x,
                         double upstream_per_pixel) {
    const int w = static_cast<int>(k.size());
    const int vx = nx - w + 1, vy = ny - w + 1;
    const std::size_t nv = static_cast<std::size_t>(vy) * vx;
    const std::size_t np = static_cast<std::size_t>(ny) * nx;
    const double c1 = spec.k1 * spec.dynamic_range * spec.k1 * spec.dynamic_range;
    const double c2 = spec.k2 * spec.dynamic_range * spec.k2 * spec.dynamic_range;

    B.x2.resize(np);
    B.y2.resize(np);
    B.xy.resize(np);
    for (std::size_t i = 0; i < np; ++i) {
        B.x2[i] = x[i] * x[i];
        B.y2[i] = y[i] * y[i];
        B.xy[i] = x[i] * y[i];
    }
    B.mx.resize(nv);
    B.my.resize(nv);
    B.mxx.resize(nv);
    B.myy.resize(nv);
    B.mxy.resize(nv);
    filt_valid(x, ny, nx, k, B.mx.data(), B.tmp);
    filt_valid(y, ny, nx, k, B.my.data(), B.tmp);
    filt_valid(B.x2.data(), ny, nx, k, B.mxx.data(), B.tmp);
    filt_valid(B.y2.data(), ny, nx, k, B.myy.data(), B.tmp);
    filt_valid(B.xy.data(), ny, nx, k, B.mxy.data(), B.tmp);

    if (grad_x) {
        B.gmu.assign(nv, 0.0);
        B.gsxx.assign(nv, 0.0);
        B.gsxy.assign(nv, 0.0);
    }
    double ssum = 0.0;
    for (std::size_t i = 0; i < nv; ++i) {
        const double mx = B.mx[i], my = B.my[i];
        const double sxx = B.mxx[i] - mx * mx;
        const double syy = B.myy[i] - my * my;
        const double sxy = B.mxy[i] - mx * my;
        const double a1 = 2.0 * mx * my + c1, a2 = 2.0 * sxy + c2;
        const double b1 = mx * mx + my * my + c1, b2 = sxx + syy + c2;
        const double s = (a1 * a2) / (b1 * b2);
        ssum += s;
        if (grad_x) {
            const double u = upstream_per_pixel;
            const double gs_mu = u * (2.0 * my * a2 / (b1 * b2) - 2.0 * mx * s / b1);
            const double gs_sxx = u * (-s / b2);
            const double gs_sxy = u * (2.0 * a1 / (b1 * b2));
            // σxx = f(x²)−μx², σxy = f(xy)−μxμy fold extra μ-terms in:
            B.gmu[i] = gs_mu - 2.0 * mx * gs_sxx - my * gs_sxy;
            B.gsxx[i] = gs_sxx;
            B.gsxy[i] = gs_sxy;
        }
    }
    if (grad_x) {
        std::vector<double>& acc_mu = B.x2;  // reuse buffers for the scatter accumulators
        std::vector<double>& acc_xx = B.y2;
        std::vector<double>& acc_xy = B.xy;
        acc_mu.assign(np, 0.0);
        acc_xx.assign(np, 0.0);
        acc_xy.assign(np, 0.0);
        filt_valid_adjoint(B.gmu.data(), ny, nx, k, acc_mu.data(), B.tmp);
        filt_valid_adjoint(B.gsxx.data(), ny, nx, k, acc_xx.data(), B.tmp);
        filt_valid_adjoint(B.gsxy.data(), ny, nx, k, acc_xy.data(), B.tmp);
        for (std::size_t i = 0; i < np; ++i)
            grad_x[i] += acc_mu[i] + 2.0 * x[i] * acc_xx[i] + y[i] * acc_xy[i];
    }
    return ssum / static_cast<double>(nv);
}

static int fitted_window(const SsimSpec& spec, int ny, int nx) {
    if (spec.window < 1 || spec.window % 2 == 0)
        throw ConfigError("SSIM window must be a positive odd size");
    if (!(spec.sigma > 0.0)) throw ConfigError("SSIM sigma must be positive");
    int w = std::min(spec.window, std::min(ny, nx));
    if (w % 2 == 0) --w;
    if (w < 1) throw ShapeError("plane too small for any SSIM window");
    return w;
}

double ssim_mean(const Volume& x, const Volume& y, const SsimSpec& spec, Volume* grad_x,
                 double upstream) {
    require_shape(y, x.shape, "ssim reference");
    const int nz = x.shape.nz, ny = x.shape.ny, nx = x.shape.nx;
    const int w = fitted_window(spec, ny, nx);
    const auto k = gaussian_kernel(w, spec.sigma);
    if (grad_x) *grad_x = Volume(x.shape);
    const std::size_t nv = static_cast<std::size_t>(ny - w + 1) * (nx - w + 1);
    // d(mean)/dS at one valid pixel of one plane:
    const double u = upstream / (static_cast<double>(nz) * static_cast<double>(nv));

    PlaneBuffers B;
    double total = 0.0;
    for (int z = 0; z < nz; ++z)
        total += ssim_plane(x.plane(z), y.plane(z), ny, nx, spec, k, B,
                            grad_x ? grad_x->plane(z) : nullptr, u);
    return total / nz;
}

std::vector<double> ssim_per_plane(const Volume& x, const Volume& y, const SsimSpec& spec) {
    require_shape(y, x.shape, "ssim reference");
    const int nz = x.shape.nz, ny = x.shape.ny, nx = x.shape.nx;
    const int w = fitted_window(spec, ny, nx);
    const auto k = gaussian_kernel(w, spec.sigma);
    PlaneBuffers B;
    std::vector<double> out(nz);
    for (int z = 0; z < nz; ++z)
        out[z] = ssim_plane(x.plane(z), y.plane(z), ny, nx, spec, k, B, nullptr, 0.0);
    return out;
}

}  // namespace cocoa
