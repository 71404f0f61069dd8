#include "cocoa/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cocoa/conv.hpp"
#include "cocoa/rng.hpp"

namespace cocoa {

namespace {

// Ladder maxima at half the extended grid's Nyquist, mirroring
// EncodingSpec::for_grid but preserving the configured bases and counts.
FieldSpec resolve_field_spec(const TrainConfig& train, Shape3 ext) {
    FieldSpec spec = train.field;
    if (train.auto_frequencies) {
        EncodingSpec& e = spec.encoding;
        e.radial_max = std::max(e.radial_base, std::max(ext.nx, ext.ny) / 8.0);
        e.axial_max = std::max(e.axial_base, ext.nz / 8.0);
        if (e.n_radial > 1 && e.radial_max == e.radial_base) e.n_radial = 1;
        if (e.n_axial > 1 && e.axial_max == e.axial_base) e.n_axial = 1;
    }
    spec.validate();
    return spec;
}

Shape3 extended_shape(Shape3 fov, const TrainConfig& train) {
    return {fov.nz + 2 * train.margin_z, fov.ny + 2 * train.margin_y,
            fov.nx + 2 * train.margin_x};
}

std::vector<double> encode_grid(const EncodingSpec& enc_spec, Shape3 ext) {
    const std::vector<double> xyz = grid_coordinates(ext);
    std::vector<double> enc(ext.size() * static_cast<std::size_t>(enc_spec.dim()));
    encode(enc_spec, xyz.data(), ext.size(), enc.data());
    return enc;
}

// Raster map from FOV voxel index to its extended-grid index.
std::vector<std::size_t> fov_to_extended(Shape3 fov, Shape3 ext, int mz, int my, int mx) {
    std::vector<std::size_t> map(fov.size());
    std::size_t p = 0;
    for (int z = 0; z < fov.nz; ++z)
        for (int y = 0; y < fov.ny; ++y)
            for (int x = 0; x < fov.nx; ++x)
                map[p++] = (static_cast<std::size_t>(z + mz) * ext.ny + (y + my)) * ext.nx +
                           (x + mx);
    return map;
}

void check_alpha(const std::vector<int>& modes, const std::vector<double>& alpha) {
    if (alpha.size() != modes.size())
        throw ShapeError("coefficient vector has " + std::to_string(alpha.size()) +
                         " entries for " + std::to_string(modes.size()) + " modes");
}

}  // namespace

void TrainConfig::validate() const {
    if (iterations < 1) throw ConfigError("training needs at least one iteration");
    if (pretrain_iterations < 0) throw ConfigError("pretrain iteration count must be >= 0");
    if (!(lr_pretrain > 0.0) || !(lr_structure > 0.0) || !(lr_zernike > 0.0))
        throw ConfigError("learning rates must be positive");
    if (!(alpha_init >= 0.0) || !std::isfinite(alpha_init))
        throw ConfigError("coefficient init range must be finite and >= 0");
    if (margin_z < 0 || margin_y < 0 || margin_x < 0)
        throw ConfigError("structure margins must be >= 0");
    if (!(weights.tv >= 0.0) || !(weights.l1 >= 0.0))
        throw ConfigError("regularizer weights must be >= 0");
    for (int j : modes) {
        from_ansi(j);  // throws on invalid index
        if (j <= 2)
            throw ConfigError("mode " + std::to_string(j) +
                              ": piston/tip/tilt are lateral nuisances absorbed by the "
                              "structure and cannot be estimated");
        if (j == 4)
            throw ConfigError(
                "mode 4 (defocus) is an axial structure shift and cannot be estimated");
    }
    field.validate();
}

std::vector<int> TrainConfig::mode_set() const {
    return modes.empty() ? default_mode_set() : modes;
}

std::vector<double> grid_coordinates(Shape3 ext) {
    if (ext.nz < 1 || ext.ny < 1 || ext.nx < 1) throw ShapeError("empty coordinate grid");
    std::vector<double> xyz(3 * ext.size());
    std::size_t p = 0;
    for (int z = 0; z < ext.nz; ++z) {
        const double cz = normalized_coord(z, ext.nz);
        for (int y = 0; y < ext.ny; ++y) {
            const double cy = normalized_coord(y, ext.ny);
            for (int x = 0; x < ext.nx; ++x) {
                xyz[p++] = normalized_coord(x, ext.nx);
                xyz[p++] = cy;
                xyz[p++] = cz;
            }
        }
    }
    return xyz;
}

EstimationResult estimate(const ImageStack& stack, const OpticalConfig& optical,
                          const TrainConfig& train) {
    optical.validate();
    train.validate();
    require_shape(stack.vol, optical.shape(), "measured stack");
    if (!all_finite(stack.vol)) throw InputError("measured stack contains non-finite values");

    const Shape3 fov = stack.vol.shape;
    const Shape3 ext = extended_shape(fov, train);
    const std::vector<int> modes = train.mode_set();

    const double lo = vmin(stack.vol);
    const double range = vmax(stack.vol) - lo;
    if (!(range > 0.0)) throw InputError("measured stack is constant; nothing to fit");
    Volume g_norm(fov);
    for (std::size_t i = 0; i < g_norm.data.size(); ++i)
        g_norm.data[i] = (stack.vol.data[i] - lo) / range;

    const FieldSpec spec = resolve_field_spec(train, ext);
    const std::vector<double> enc = encode_grid(spec.encoding, ext);
    const std::size_t n_ext = ext.size();
    NeuralField field(spec, mix_seed(train.seed, 0x7e1d));

    Volume s(ext);
    std::vector<double> grad_theta(field.n_params(), 0.0);

    // Phase 1: fit the field to the measured stack directly (pixelwise MSE
    // over the FOV) so the joint phase starts from a plausible structure.
    if (train.pretrain_iterations > 0) {
        const auto fov_idx = fov_to_extended(fov, ext, train.margin_z, train.margin_y,
                                             train.margin_x);
        Adam adam_pre(field.n_params());
        Volume ds(ext);
        const double inv_n = 1.0 / static_cast<double>(fov.size());
        for (int t = 0; t < train.pretrain_iterations; ++t) {
            field.forward(enc.data(), n_ext, s.data.data());
            std::fill(ds.data.begin(), ds.data.end(), 0.0);
            double mse = 0.0;
            for (std::size_t i = 0; i < fov_idx.size(); ++i) {
                const double d = s.data[fov_idx[i]] - g_norm.data[i];
                mse += d * d * inv_n;
                ds.data[fov_idx[i]] = 2.0 * d * inv_n;
            }
            if (!std::isfinite(mse))
                throw TrainingError("pretrain diverged at iteration " + std::to_string(t), {});
            std::fill(grad_theta.begin(), grad_theta.end(), 0.0);
            field.backward(enc.data(), n_ext, ds.data.data(), grad_theta.data());
            adam_pre.step(field.params(), grad_theta,
                          cosine_lr(train.lr_pretrain, t, train.pretrain_iterations));
        }
    }

    std::vector<double> alpha(modes.size(), 0.0);
    {
        Rng rng(mix_seed(train.seed, 0xa1fa));
        for (double& a : alpha) a = train.alpha_init * (2.0 * rng.uniform() - 1.0);
    }

    // Phase 2: joint structure + wavefront optimization.
    Adam adam_theta(field.n_params());
    Adam adam_alpha(alpha.size());
    ConvPair conv(ext, optical.shape(), fov);
    EstimationResult result;
    result.trace.reserve(static_cast<std::size_t>(train.iterations));
    Volume g_est(fov), g_struct(ext), g_conv_s, g_h;
    for (int t = 0; t < train.iterations; ++t) {
        field.forward(enc.data(), n_ext, s.data.data());
        const PsfTape tape = psf_3d_with_tape(optical, modes, alpha);
        const Volume est = conv.forward(s, tape.psf);
        const LossBreakdown bd =
            loss(est, g_norm, s, train.ssim, train.weights, &g_est, &g_struct);
        result.trace.push_back(bd);
        if (!std::isfinite(bd.total))
            throw TrainingError("training diverged at iteration " + std::to_string(t),
                                result.trace);
        conv.backward(g_est, &g_conv_s, &g_h);
        const std::vector<double> g_alpha = psf_backward(tape, g_h);
        for (std::size_t i = 0; i < g_struct.data.size(); ++i)
            g_struct.data[i] += g_conv_s.data[i];
        std::fill(grad_theta.begin(), grad_theta.end(), 0.0);
        field.backward(enc.data(), n_ext, g_struct.data.data(), grad_theta.data());
        adam_theta.step(field.params(), grad_theta,
                        cosine_lr(train.lr_structure, t, train.iterations));
        adam_alpha.step(alpha, g_alpha, cosine_lr(train.lr_zernike, t, train.iterations));
    }

    field.forward(enc.data(), n_ext, s.data.data());
    result.structure.vol = Volume(fov);
    const auto fov_idx = fov_to_extended(fov, ext, train.margin_z, train.margin_y,
                                         train.margin_x);
    for (std::size_t i = 0; i < fov_idx.size(); ++i)
        result.structure.vol.data[i] = s.data[fov_idx[i]] * range;
    result.structure.pitch = stack.pitch;
    for (std::size_t k = 0; k < modes.size(); ++k)
        result.aberration.set(modes[k], alpha[k]);
    result.field_spec = spec;
    result.field_params = field.params();
    result.stack_min = lo;
    result.stack_range = range;
    return result;
}

namespace {

SolverGradients eval_point(const Volume& g_norm, const OpticalConfig& optical,
                           const TrainConfig& train, const NeuralField& field,
                           const std::vector<double>& alpha, bool want_grads) {
    optical.validate();
    train.validate();
    require_shape(g_norm, optical.shape(), "normalized stack");
    const std::vector<int> modes = train.mode_set();
    check_alpha(modes, alpha);

    const Shape3 fov = g_norm.shape;
    const Shape3 ext = extended_shape(fov, train);
    const std::vector<double> enc = encode_grid(field.spec().encoding, ext);

    Volume s(ext);
    field.forward(enc.data(), ext.size(), s.data.data());
    const PsfTape tape = psf_3d_with_tape(optical, modes, alpha);
    ConvPair conv(ext, optical.shape(), fov);
    const Volume est = conv.forward(s, tape.psf);

    SolverGradients out;
    if (!want_grads) {
        out.loss = loss(est, g_norm, s, train.ssim, train.weights);
        return out;
    }
    Volume g_est(fov), g_struct(ext);
    out.loss = loss(est, g_norm, s, train.ssim, train.weights, &g_est, &g_struct);
    Volume g_conv_s, g_h;
    conv.backward(g_est, &g_conv_s, &g_h);
    out.grad_alpha = psf_backward(tape, g_h);
    for (std::size_t i = 0; i < g_struct.data.size(); ++i)
        g_struct.data[i] += g_conv_s.data[i];
    out.grad_theta.assign(field.n_params(), 0.0);
    field.backward(enc.data(), ext.size(), g_struct.data.data(), out.grad_theta.data());
    return out;
}

}  // namespace

LossBreakdown solver_loss(const Volume& g_norm, const OpticalConfig& optical,
                          const TrainConfig& train, const NeuralField& field,
                          const std::vector<double>& alpha) {
    return eval_point(g_norm, optical, train, field, alpha, false).loss;
}

SolverGradients solver_gradients(const Volume& g_norm, const OpticalConfig& optical,
                                 const TrainConfig& train, const NeuralField& field,
                                 const std::vector<double>& alpha) {
    return eval_point(g_norm, optical, train, field, alpha, true);
}

}  // namespace cocoa
