#include "cocoa/rld.hpp"

#include <algorithm>
#include <cmath>

#include "cocoa/conv.hpp"

namespace cocoa {

namespace {

Volume clamped_non_negative(const Volume& v, const char* what) {
    if (!all_finite(v)) throw InputError(std::string(what) + " contains non-finite values");
    Volume out = v;
    for (double& x : out.data)
        if (x < 0.0) x = 0.0;
    return out;
}

double ratio_floor(const Volume& g, double floor_scale) {
    const double peak = vmax(g);
    if (!(peak > 0.0)) throw InputError("image has no positive signal");
    return floor_scale * peak;
}

// One multiplicative update of `est` under the fixed-kernel operator.
void rl_update(const ConvOp& op, const Volume& g, double eps, Volume& est, Volume& work) {
    work = op.forward(est);
    for (std::size_t i = 0; i < work.data.size(); ++i) {
        const double denom = std::max(work.data[i], 0.0) + eps;
        work.data[i] = g.data[i] / denom;
    }
    const Volume corr = op.adjoint(work);
    for (std::size_t i = 0; i < est.data.size(); ++i)
        est.data[i] = std::max(est.data[i] * corr.data[i], 0.0);
}

}  // namespace

void RlConfig::validate() const {
    if (iterations < 1) throw ConfigError("deconvolution needs at least one iteration");
    if (!(floor_scale > 0.0)) throw ConfigError("ratio floor must be positive");
}

void BlindRlConfig::validate() const {
    if (alternations < 1) throw ConfigError("blind deconvolution needs at least one alternation");
    if (final_iterations < 1) throw ConfigError("final deconvolution pass needs iterations");
    if (!(floor_scale > 0.0)) throw ConfigError("ratio floor must be positive");
}

Volume richardson_lucy(const Volume& image, const Volume& psf, const RlConfig& cfg) {
    cfg.validate();
    if (!all_finite(psf)) throw InputError("PSF contains non-finite values");
    const Volume g = clamped_non_negative(image, "image");
    const double eps = ratio_floor(g, cfg.floor_scale);
    const ConvOp op(psf, g.shape, g.shape);
    Volume est = g;  // measured image as the starting point
    Volume work(g.shape);
    for (int it = 0; it < cfg.iterations; ++it) rl_update(op, g, eps, est, work);
    return est;
}

BlindRlResult blind_richardson_lucy(const Volume& image, const Volume& psf_init,
                                    const BlindRlConfig& cfg) {
    cfg.validate();
    require_shape(psf_init, image.shape, "initial PSF");
    const Volume g = clamped_non_negative(image, "image");
    const double eps = ratio_floor(g, cfg.floor_scale);

    BlindRlResult out;
    out.psf = clamped_non_negative(psf_init, "initial PSF");
    {
        const double s = vsum(out.psf);
        if (!(s > 0.0)) throw InputError("initial PSF has no mass");
        for (double& v : out.psf.data) v /= s;
    }
    out.image = g;
    Volume work(g.shape);
    for (int it = 0; it < cfg.alternations; ++it) {
        {
            const ConvOp op(out.psf, g.shape, g.shape);
            rl_update(op, g, eps, out.image, work);
        }
        {
            const ConvOp op(out.image, g.shape, g.shape);
            rl_update(op, g, eps, out.psf, work);
        }
        const double s = vsum(out.psf);
        if (!(s > 0.0)) throw NumericalError("blind deconvolution PSF collapsed to zero");
        for (double& v : out.psf.data) v /= s;
    }
    RlConfig final_cfg;
    final_cfg.iterations = cfg.final_iterations;
    final_cfg.floor_scale = cfg.floor_scale;
    out.image = richardson_lucy(image, out.psf, final_cfg);
    return out;
}

}  // namespace cocoa
