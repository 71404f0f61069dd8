#include "cocoa/field.hpp"

#include <algorithm>
#include <cmath>

#include "cocoa/rng.hpp"

namespace cocoa {

namespace {

constexpr std::size_t kChunk = 2048;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
inline double gelu_grad(double x) {
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}
inline double softplus(double x) {
    if (x > 35.0) return x;
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}
inline double softplus_grad(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// C[n×out] = A[n×in] · W[in×out] + b, accumulating in fixed order.
void linear_forward(const double* A, std::size_t n, int in, int out, const double* W,
                    const double* b, double* C) {
    for (std::size_t i = 0; i < n; ++i) {
        double* c = C + i * out;
        for (int j = 0; j < out; ++j) c[j] = b[j];
        const double* a = A + i * in;
        for (int k = 0; k < in; ++k) {
            const double ak = a[k];
            const double* w = W + static_cast<std::size_t>(k) * out;
            for (int j = 0; j < out; ++j) c[j] += ak * w[j];
        }
    }
}

// dA[n×in] += dC[n×out] · Wᵀ
void linear_backward_input(const double* dC, std::size_t n, int in, int out, const double* W,
                           double* dA) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* dc = dC + i * out;
        double* da = dA + i * in;
        for (int k = 0; k < in; ++k) {
            const double* w = W + static_cast<std::size_t>(k) * out;
            double acc = 0.0;
            for (int j = 0; j < out; ++j) acc += dc[j] * w[j];
            da[k] = acc;
        }
    }
}

// dW[in×out] += Aᵀ · dC ;  db[out] += Σ_i dC
void linear_backward_params(const double* A, const double* dC, std::size_t n, int in, int out,
                            double* dW, double* db) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* a = A + i * in;
        const double* dc = dC + i * out;
        for (int k = 0; k < in; ++k) {
            const double ak = a[k];
            double* w = dW + static_cast<std::size_t>(k) * out;
            for (int j = 0; j < out; ++j) w[j] += ak * dc[j];
        }
        for (int j = 0; j < out; ++j) db[j] += dc[j];
    }
}

}  // namespace

void FieldSpec::validate() const {
    encoding.validate();
    if (hidden.empty()) throw ConfigError("field needs at least one hidden layer");
    for (int w : hidden)
        if (w < 1) throw ConfigError("hidden widths must be >= 1");
    for (int s : skip_layers)
        if (s < 1 || s >= n_layers())
            throw ConfigError("skip layer index out of range [1, n_layers-1]");
}

void NeuralField::build_layout() {
    spec_.validate();
    const int enc_dim = spec_.encoding.dim();
    const int n_layers = spec_.n_layers();
    layers_.clear();
    std::size_t off = 0;
    for (int l = 0; l < n_layers; ++l) {
        Layer L;
        L.skip = l > 0 && std::find(spec_.skip_layers.begin(), spec_.skip_layers.end(), l) !=
                              spec_.skip_layers.end();
        int base_in = l == 0 ? enc_dim : spec_.hidden[l - 1];
        L.in = base_in + (L.skip ? enc_dim : 0);
        L.out = l == n_layers - 1 ? 1 : spec_.hidden[l];
        L.w_off = off;
        off += static_cast<std::size_t>(L.in) * L.out;
        L.b_off = off;
        off += L.out;
        layers_.push_back(L);
    }
    params_.resize(off);
}

NeuralField::NeuralField(FieldSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    build_layout();
    Rng rng(seed);
    for (const Layer& L : layers_) {
        double bound = 1.0 / std::sqrt(static_cast<double>(L.in));
        for (std::size_t i = 0; i < static_cast<std::size_t>(L.in) * L.out + L.out; ++i)
            params_[L.w_off + i] = rng.uniform(-bound, bound);
    }
}

NeuralField::NeuralField(FieldSpec spec, std::vector<double> params) : spec_(std::move(spec)) {
    build_layout();
    if (params.size() != params_.size())
        throw ShapeError("field parameter blob has " + std::to_string(params.size()) +
                         " values, architecture needs " + std::to_string(params_.size()));
    params_ = std::move(params);
}

void NeuralField::forward_chunk(const double* enc, std::size_t n,
                                std::vector<std::vector<double>>& pre,
                                std::vector<std::vector<double>>& post) const {
    const int enc_dim = spec_.encoding.dim();
    const int n_layers = spec_.n_layers();
    pre.resize(n_layers);
    post.resize(n_layers);
    std::vector<double> input;
    for (int l = 0; l < n_layers; ++l) {
        const Layer& L = layers_[l];
        const double* in_ptr;
        if (l == 0) {
            in_ptr = enc;
        } else if (L.skip) {
            input.resize(n * L.in);
            const auto& prev = post[l - 1];
            for (std::size_t i = 0; i < n; ++i) {
                double* row = input.data() + i * L.in;
                std::copy_n(prev.data() + i * layers_[l - 1].out, layers_[l - 1].out, row);
                std::copy_n(enc + i * enc_dim, enc_dim, row + layers_[l - 1].out);
            }
            in_ptr = input.data();
        } else {
            in_ptr = post[l - 1].data();
        }
        pre[l].resize(n * L.out);
        linear_forward(in_ptr, n, L.in, L.out, params_.data() + L.w_off, params_.data() + L.b_off,
                       pre[l].data());
        post[l].resize(n * L.out);
        if (l < n_layers - 1) {
            for (std::size_t i = 0; i < pre[l].size(); ++i) post[l][i] = gelu(pre[l][i]);
        } else {
            for (std::size_t i = 0; i < pre[l].size(); ++i)
                post[l][i] = spec_.output == FieldSpec::Output::softplus
                                 ? softplus(pre[l][i])
                                 : std::max(0.0, pre[l][i]);
        }
    }
}

void NeuralField::forward(const double* enc, std::size_t n, double* out) const {
    const int enc_dim = spec_.encoding.dim();
    std::vector<std::vector<double>> pre, post;
    for (std::size_t start = 0; start < n; start += kChunk) {
        std::size_t len = std::min(kChunk, n - start);
        forward_chunk(enc + start * enc_dim, len, pre, post);
        std::copy_n(post.back().data(), len, out + start);
    }
}

void NeuralField::backward(const double* enc, std::size_t n, const double* grad_out,
                           double* grad_params) const {
    const int enc_dim = spec_.encoding.dim();
    const int n_layers = spec_.n_layers();
    std::vector<std::vector<double>> pre, post;
    std::vector<double> delta, delta_prev, input;
    for (std::size_t start = 0; start < n; start += kChunk) {
        std::size_t len = std::min(kChunk, n - start);
        const double* enc_chunk = enc + start * enc_dim;
        forward_chunk(enc_chunk, len, pre, post);

        // Output nonlinearity.
        delta.resize(len);
        for (std::size_t i = 0; i < len; ++i) {
            double d = spec_.output == FieldSpec::Output::softplus
                           ? softplus_grad(pre[n_layers - 1][i])
                           : (pre[n_layers - 1][i] > 0.0 ? 1.0 : 0.0);
            delta[i] = grad_out[start + i] * d;
        }

        for (int l = n_layers - 1; l >= 0; --l) {
            const Layer& L = layers_[l];
            // Input that fed this layer during the forward pass.
            const double* in_ptr;
            if (l == 0) {
                in_ptr = enc_chunk;
            } else if (L.skip) {
                input.resize(len * L.in);
                for (std::size_t i = 0; i < len; ++i) {
                    double* row = input.data() + i * L.in;
                    std::copy_n(post[l - 1].data() + i * layers_[l - 1].out, layers_[l - 1].out,
                                row);
                    std::copy_n(enc_chunk + i * enc_dim, enc_dim, row + layers_[l - 1].out);
                }
                in_ptr = input.data();
            } else {
                in_ptr = post[l - 1].data();
            }
            linear_backward_params(in_ptr, delta.data(), len, L.in, L.out,
                                   grad_params + L.w_off, grad_params + L.b_off);
            if (l == 0) break;
            delta_prev.assign(len * L.in, 0.0);
            linear_backward_input(delta.data(), len, L.in, L.out, params_.data() + L.w_off,
                                  delta_prev.data());
            // Strip the encoding block (constant input); keep dL/d(post[l-1]).
            const int prev_out = layers_[l - 1].out;
            delta.resize(len * prev_out);
            for (std::size_t i = 0; i < len; ++i)
                for (int j = 0; j < prev_out; ++j)
                    delta[i * prev_out + j] = delta_prev[i * L.in + j] *
                                              gelu_grad(pre[l - 1][i * prev_out + j]);
        }
    }
}

}  // namespace cocoa
