#include "cocoa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>

#include "cocoa/fft.hpp"
#include "cocoa/linalg.hpp"
#include "cocoa/rng.hpp"

namespace cocoa {

double camera_gain(const Volume& frames) {
    const int nf = frames.shape.nz;
    if (nf < 2) throw InputError("gain calibration needs at least 2 frames");
    if (!all_finite(frames)) throw InputError("calibration frames contain non-finite values");
    const std::size_t npix = static_cast<std::size_t>(frames.shape.ny) * frames.shape.nx;
    std::vector<double> ratios;
    ratios.reserve(npix);
    for (std::size_t i = 0; i < npix; ++i) {
        double mean = 0.0;
        for (int f = 0; f < nf; ++f) mean += frames.data[f * npix + i];
        mean /= nf;
        if (!(mean > 0.0)) continue;  // exclude zero-mean pixels
        double var = 0.0;
        for (int f = 0; f < nf; ++f) {
            const double d = frames.data[f * npix + i] - mean;
            var += d * d;
        }
        var /= (nf - 1);
        ratios.push_back(var / mean);
    }
    if (ratios.empty()) throw InputError("all pixels excluded from gain calibration");
    const std::size_t mid = ratios.size() / 2;
    std::nth_element(ratios.begin(), ratios.begin() + mid, ratios.end());
    double med = ratios[mid];
    if (ratios.size() % 2 == 0) {
        const double below = *std::max_element(ratios.begin(), ratios.begin() + mid);
        med = 0.5 * (med + below);
    }
    return med;
}

double snr(const Volume& stack, const std::vector<std::uint8_t>& signal_mask, double gain,
           double readout) {
    if (signal_mask.size() != stack.data.size())
        throw ShapeError("signal mask does not match the stack");
    if (!(gain > 0.0)) throw DomainError("gain must be positive");
    if (readout < 0.0) throw DomainError("readout noise must be non-negative");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < signal_mask.size(); ++i)
        if (signal_mask[i]) {
            sum += stack.data[i];
            ++n;
        }
    if (n == 0) throw InputError("empty signal mask");
    const double ybar = sum / static_cast<double>(n);
    if (ybar < 0.0) throw DomainError("mean signal is negative; SNR undefined");
    const double photons = ybar / gain;
    const double rphot = readout / gain;
    const double var = photons + rphot * rphot;
    if (var == 0.0) return 0.0;  // zero-signal, zero-read limit
    return photons / std::sqrt(var);
}

namespace {

// Separable Gaussian blur, σ in voxels, kernel truncated at 3σ, edges
// handled by reflection.
std::vector<double> gauss_kernel_1d(double sigma) {
    const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * r + 1);
    double s = 0.0;
    for (int i = -r; i <= r; ++i) s += k[i + r] = std::exp(-0.5 * (i / sigma) * (i / sigma));
    for (double& v : k) v /= s;
    return k;
}

int reflect(int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
}

Volume gaussian_blur_3d(const Volume& v, double sigma) {
    const auto k = gauss_kernel_1d(sigma);
    const int r = (static_cast<int>(k.size()) - 1) / 2;
    const int nz = v.shape.nz, ny = v.shape.ny, nx = v.shape.nx;
    Volume a = v, b(v.shape);
    // x axis
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                double s = 0.0;
                for (int t = -r; t <= r; ++t) s += k[t + r] * a.at(z, y, reflect(x + t, nx));
                b.at(z, y, x) = s;
            }
    std::swap(a, b);
    // y axis
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                double s = 0.0;
                for (int t = -r; t <= r; ++t) s += k[t + r] * a.at(z, reflect(y + t, ny), x);
                b.at(z, y, x) = s;
            }
    std::swap(a, b);
    // z axis (skipped for single-plane input)
    if (nz == 1) return a;
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                double s = 0.0;
                for (int t = -r; t <= r; ++t) s += k[t + r] * a.at(reflect(z + t, nz), y, x);
                b.at(z, y, x) = s;
            }
    return b;
}

struct Gmm1d {
    double w[2], mu[2], var[2];
    bool converged = false;
    int iterations = 0;
};

Gmm1d fit_gmm2(const std::vector<double>& values, int max_iter, double tol) {
    Gmm1d g;
    const std::size_t n = values.size();
    double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var0 = 0.0;
    for (double v : values) var0 += (v - mean) * (v - mean);
    var0 /= n;
    if (!(var0 > 0.0)) throw DomainError("signal/background split undefined: single-mode data");
    const double var_floor = 1e-12 * var0;

    g.mu[0] = percentile(values, 10.0);
    g.mu[1] = percentile(values, 90.0);
    if (g.mu[0] == g.mu[1])
        throw DomainError("signal/background split undefined: single-mode data");
    g.w[0] = g.w[1] = 0.5;
    g.var[0] = g.var[1] = var0;

    std::vector<double> resp(n);  // posterior of component 1
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int it = 1; it <= max_iter; ++it) {
        g.iterations = it;
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double p[2];
            for (int c = 0; c < 2; ++c) {
                const double d = values[i] - g.mu[c];
                p[c] = g.w[c] / std::sqrt(2.0 * M_PI * g.var[c]) *
                       std::exp(-0.5 * d * d / g.var[c]);
            }
            const double tot = p[0] + p[1];
            resp[i] = tot > 0.0 ? p[1] / tot : 0.5;
            ll += std::log(std::max(tot, 1e-300));
        }
        ll /= static_cast<double>(n);
        double n1 = std::accumulate(resp.begin(), resp.end(), 0.0);
        double n0 = static_cast<double>(n) - n1;
        if (!(n0 > 0.0) || !(n1 > 0.0))
            throw DomainError("signal/background split undefined: a component vanished");
        double m0 = 0.0, m1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            m0 += (1.0 - resp[i]) * values[i];
            m1 += resp[i] * values[i];
        }
        g.mu[0] = m0 / n0;
        g.mu[1] = m1 / n1;
        double v0 = 0.0, v1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d0 = values[i] - g.mu[0], d1 = values[i] - g.mu[1];
            v0 += (1.0 - resp[i]) * d0 * d0;
            v1 += resp[i] * d1 * d1;
        }
        g.var[0] = std::max(v0 / n0, var_floor);
        g.var[1] = std::max(v1 / n1, var_floor);
        g.w[0] = n0 / static_cast<double>(n);
        g.w[1] = n1 / static_cast<double>(n);
        if (std::abs(ll - prev_ll) < tol) {
            g.converged = true;
            break;
        }
        prev_ll = ll;
    }
    return g;
}

}  // namespace

void SbrConfig::validate() const {
    if (!(lowpass_sigma > 0.0)) throw ConfigError("lowpass sigma must be positive");
    if (!(highpass_sigma > lowpass_sigma))
        throw ConfigError("highpass sigma must exceed lowpass sigma");
    if (max_em_iterations < 1) throw ConfigError("EM needs at least one iteration");
    if (!(em_tolerance > 0.0)) throw ConfigError("EM tolerance must be positive");
}

SbrResult sbr(const Volume& stack, const SbrConfig& cfg) {
    cfg.validate();
    if (!all_finite(stack)) throw InputError("stack contains non-finite values");
    if (stack.data.empty()) throw InputError("empty stack");

    // (1) denoise, (2) subtract the broad blur (DC / slow background).
    const Volume low = gaussian_blur_3d(stack, cfg.lowpass_sigma);
    const Volume broad = gaussian_blur_3d(stack, cfg.highpass_sigma);
    std::vector<double> filtered(stack.data.size());
    for (std::size_t i = 0; i < filtered.size(); ++i) filtered[i] = low.data[i] - broad.data[i];

    // (3) two-component mixture on the filtered values.
    const Gmm1d g = fit_gmm2(filtered, cfg.max_em_iterations, cfg.em_tolerance);
    const int sig_c = g.mu[1] >= g.mu[0] ? 1 : 0;

    SbrResult out;
    out.converged = g.converged;
    out.em_iterations = g.iterations;
    out.signal_mask.assign(filtered.size(), 0);
    out.background_mask.assign(filtered.size(), 0);
    double sum_sig = 0.0, sum_bg = 0.0;
    std::size_t n_sig = 0, n_bg = 0;
    for (std::size_t i = 0; i < filtered.size(); ++i) {
        double p[2];
        for (int c = 0; c < 2; ++c) {
            const double d = filtered[i] - g.mu[c];
            p[c] = g.w[c] / std::sqrt(2.0 * M_PI * g.var[c]) * std::exp(-0.5 * d * d / g.var[c]);
        }
        const double tot = p[0] + p[1];
        const bool is_sig = tot > 0.0 ? p[sig_c] / tot >= 0.5 : false;
        if (is_sig) {
            out.signal_mask[i] = 1;
            sum_sig += stack.data[i];
            ++n_sig;
        } else {
            out.background_mask[i] = 1;
            sum_bg += stack.data[i];
            ++n_bg;
        }
    }
    if (n_sig == 0 || n_bg == 0)
        throw DomainError("signal/background split undefined: one class is empty");
    // (4) ratio on the ORIGINAL stack values.
    const double mean_bg = sum_bg / static_cast<double>(n_bg);
    if (!(mean_bg > 0.0)) throw DomainError("background mean is not positive; SBR undefined");
    out.sbr = (sum_sig / static_cast<double>(n_sig)) / mean_bg;
    return out;
}

double pcc(const Volume& a, const Volume& b) {
    require_shape(b, a.shape, "correlation argument");
    const std::size_t n = a.data.size();
    if (n == 0) throw InputError("empty volumes");
    double ma = vmean(a), mb = vmean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a.data[i] - ma, db = b.data[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0))
        throw DomainError("correlation undefined for zero-variance input");
    return sab / std::sqrt(saa * sbb);
}

namespace {

struct Cloud {
    std::vector<double> pos;  // xyz triples, µm
    std::vector<double> w;    // normalized weights
};

Cloud make_cloud(const Volume& v, Pitches pitch) {
    Cloud c;
    double total = 0.0;
    for (int z = 0; z < v.shape.nz; ++z)
        for (int y = 0; y < v.shape.ny; ++y)
            for (int x = 0; x < v.shape.nx; ++x) {
                const double m = std::max(v.at(z, y, x), 0.0);
                if (m == 0.0) continue;
                c.pos.push_back(x * pitch.dx);
                c.pos.push_back(y * pitch.dy);
                c.pos.push_back(z * pitch.dz);
                c.w.push_back(m);
                total += m;
            }
    if (!(total > 0.0)) throw DomainError("distance undefined: volume has no positive mass");
    for (double& w : c.w) w /= total;
    return c;
}

// 1-D p-Wasserstein between weighted empirical distributions given values
// sorted ascending; walks the merged quantile function.
double wasserstein_1d_p(const std::vector<double>& va, const std::vector<double>& wa,
                        const std::vector<double>& vb, const std::vector<double>& wb, int p) {
    double acc = 0.0;
    std::size_t ia = 0, ib = 0;
    double ra = wa[0], rb = wb[0];
    while (true) {
        const double step = std::min(ra, rb);
        acc += step * std::pow(std::abs(va[ia] - vb[ib]), p);
        ra -= step;
        rb -= step;
        if (ra <= 0.0) {
            if (++ia >= wa.size()) break;
            ra = wa[ia];
        }
        if (rb <= 0.0) {
            if (++ib >= wb.size()) break;
            rb = wb[ib];
        }
    }
    return acc;
}

}  // namespace

double emd_sliced(const Volume& a, const Volume& b, Pitches pitch, int projections, int p,
                  std::uint64_t seed) {
    if (projections < 1) throw ConfigError("need at least one projection");
    if (p < 1) throw ConfigError("Wasserstein order must be >= 1");
    if (!(pitch.dx > 0.0) || !(pitch.dy > 0.0) || !(pitch.dz > 0.0))
        throw ConfigError("voxel pitch must be positive");
    if (!all_finite(a) || !all_finite(b)) throw InputError("volumes contain non-finite values");
    const Cloud ca = make_cloud(a, pitch), cb = make_cloud(b, pitch);

    Rng rng(seed);
    const std::size_t na = ca.w.size(), nb = cb.w.size();
    std::vector<double> ta(na), tb(nb), sa(na), sb(nb), wa(na), wb(nb);
    std::vector<std::size_t> oa(na), ob(nb);
    double mean_wp = 0.0;
    for (int k = 0; k < projections; ++k) {
        double d[3], norm = 0.0;
        do {
            for (double& di : d) di = rng.normal(0.0, 1.0);
            norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        } while (norm < 1e-12);
        for (double& di : d) di /= norm;

        for (std::size_t i = 0; i < na; ++i)
            ta[i] = d[0] * ca.pos[3 * i] + d[1] * ca.pos[3 * i + 1] + d[2] * ca.pos[3 * i + 2];
        for (std::size_t i = 0; i < nb; ++i)
            tb[i] = d[0] * cb.pos[3 * i] + d[1] * cb.pos[3 * i + 1] + d[2] * cb.pos[3 * i + 2];
        std::iota(oa.begin(), oa.end(), std::size_t{0});
        std::iota(ob.begin(), ob.end(), std::size_t{0});
        std::sort(oa.begin(), oa.end(), [&](std::size_t i, std::size_t j) { return ta[i] < ta[j]; });
        std::sort(ob.begin(), ob.end(), [&](std::size_t i, std::size_t j) { return tb[i] < tb[j]; });
        for (std::size_t i = 0; i < na; ++i) {
            sa[i] = ta[oa[i]];
            wa[i] = ca.w[oa[i]];
        }
        for (std::size_t i = 0; i < nb; ++i) {
            sb[i] = tb[ob[i]];
            wb[i] = cb.w[ob[i]];
        }
        mean_wp += wasserstein_1d_p(sa, wa, sb, wb, p);
    }
    mean_wp /= static_cast<double>(projections);
    return std::pow(mean_wp, 1.0 / static_cast<double>(p));
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw InputError("percentile of an empty set");
    if (!(q >= 0.0) || !(q <= 100.0)) throw DomainError("percentile rank must be in [0, 100]");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

double image_contrast(const Volume& image) {
    if (!all_finite(image)) throw InputError("image contains non-finite values");
    const double p1 = percentile(image.data, 1.0);
    const double p99 = percentile(image.data, 99.0);
    if (!(p1 > 0.0))
        throw DomainError("1st percentile is not positive; contrast needs an offset first");
    return p99 / p1;
}

Volume mip_z(const Volume& v) {
    Volume out({1, v.shape.ny, v.shape.nx});
    const std::size_t npix = out.data.size();
    for (std::size_t i = 0; i < npix; ++i) out.data[i] = -std::numeric_limits<double>::infinity();
    for (int z = 0; z < v.shape.nz; ++z) {
        const double* p = v.data.data() + z * npix;
        for (std::size_t i = 0; i < npix; ++i) out.data[i] = std::max(out.data[i], p[i]);
    }
    return out;
}

RadialPsd radial_psd(const Volume& image, double pixel) {
    if (image.shape.nz != 1) throw ShapeError("power spectrum expects a single 2-D image");
    if (image.shape.ny != image.shape.nx) throw ShapeError("power spectrum expects a square image");
    if (!(pixel > 0.0)) throw ConfigError("pixel pitch must be positive");
    const int n = image.shape.nx;
    const double df = 1.0 / (n * pixel);

    std::vector<std::complex<double>> in(image.data.begin(), image.data.end()), out(in.size());
    fft::forward2d(n, n, in.data(), out.data());

    const int n_bins = static_cast<int>(std::floor(std::hypot(n / 2.0, n / 2.0))) + 1;
    RadialPsd psd;
    psd.freq.resize(n_bins);
    psd.power.assign(n_bins, 0.0);
    psd.count.assign(n_bins, 0);
    for (int b = 0; b < n_bins; ++b) psd.freq[b] = b * df;
    const double inv_n2 = 1.0 / (static_cast<double>(n) * n);
    for (int y = 0; y < n; ++y) {
        const double fy = (y < (n + 1) / 2 ? y : y - n);
        for (int x = 0; x < n; ++x) {
            const double fx = (x < (n + 1) / 2 ? x : x - n);
            const int b = static_cast<int>(std::lround(std::hypot(fx, fy)));
            psd.power[b] += std::norm(out[static_cast<std::size_t>(y) * n + x]) * inv_n2;
            ++psd.count[b];
        }
    }
    for (int b = 0; b < n_bins; ++b)
        if (psd.count[b] > 0) psd.power[b] /= static_cast<double>(psd.count[b]);
    return psd;
}

double rms_wavefront_error(const WavefrontAberration& a, const WavefrontAberration& b) {
    double ss = 0.0;
    for (const auto& [j, v] : a.coeffs) {
        const double d = v - b.get(j);
        ss += d * d;
    }
    for (const auto& [j, v] : b.coeffs)
        if (!a.coeffs.count(j)) ss += v * v;
    return std::sqrt(ss);
}

PiecewiseFit piecewise_cutoff(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    if (n < 4) throw InputError("piecewise fit needs at least 4 points");
    if (ys.size() != n) throw ShapeError("xs/ys size mismatch");
    for (std::size_t i = 1; i < n; ++i)
        if (!(xs[i] > xs[i - 1])) throw InputError("xs must be strictly increasing");

    const double range = xs.back() - xs.front();
    const double step = range / 100.0;
    std::vector<double> candidates;
    for (double c = xs[1]; c <= xs[n - 2] + 1e-12 * range; c += step) candidates.push_back(c);
    if (candidates.empty() || candidates.back() < xs[n - 2] - 1e-12 * range)
        candidates.push_back(xs[n - 2]);

    PiecewiseFit best;
    double best_sse = std::numeric_limits<double>::infinity();
    std::vector<double> design(n * 3), beta;
    for (double c : candidates) {
        for (std::size_t i = 0; i < n; ++i) {
            design[3 * i] = 1.0;
            design[3 * i + 1] = xs[i];
            design[3 * i + 2] = std::max(xs[i] - c, 0.0);
        }
        try {
            beta = lstsq(design, n, 3, ys);
        } catch (const NumericalError&) {
            continue;  // rank-deficient candidate (e.g. no points past c)
        }
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double pred = beta[0] + beta[1] * xs[i] + beta[2] * design[3 * i + 2];
            sse += (ys[i] - pred) * (ys[i] - pred);
        }
        if (sse < best_sse) {  // strict: ties keep the smaller breakpoint
            best_sse = sse;
            best.breakpoint = c;
            best.intercept1 = beta[0];
            best.slope1 = beta[1];
            best.slope2 = beta[1] + beta[2];
            best.intercept2 = beta[0] - beta[2] * c;
            best.sse = sse;
        }
    }
    if (!std::isfinite(best_sse)) throw NumericalError("piecewise fit failed at every breakpoint");
    return best;
}

}  // namespace cocoa
