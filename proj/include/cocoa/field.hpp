#pragma once

// Coordinate-MLP over encoded positions. Default architecture: 9 linear
// layers of width 128, the encoding re-concatenated to the input of the
// middle layer (index 4), GELU between layers, softplus on the scalar
// output so structure values stay non-negative. Weights and biases start
// uniform on ±1/√fan_in. Gradients are exact reverse-mode, accumulated in
// fixed chunk order so results do not depend on threading.

#include <cstdint>
#include <vector>

#include "cocoa/encoding.hpp"
#include "cocoa/types.hpp"

namespace cocoa {

struct FieldSpec {
    EncodingSpec encoding;
    std::vector<int> hidden{128, 128, 128, 128, 128, 128, 128, 128};  // 8 hidden + scalar out
    std::vector<int> skip_layers{4};  // 0-based layer indices that re-see the encoding
    enum class Output { softplus, relu } output = Output::softplus;

    void validate() const;
    [[nodiscard]] int n_layers() const { return static_cast<int>(hidden.size()) + 1; }
};

class NeuralField {
public:
    NeuralField(FieldSpec spec, std::uint64_t seed);
    // Restore from serialized parameters.
    NeuralField(FieldSpec spec, std::vector<double> params);

    [[nodiscard]] const FieldSpec& spec() const { return spec_; }
    [[nodiscard]] std::size_t n_params() const { return params_.size(); }
    std::vector<double>& params() { return params_; }
    [[nodiscard]] const std::vector<double>& params() const { return params_; }

    // out[i] = field(enc row i); enc is n × encoding.dim() row-major.
    void forward(const double* enc, std::size_t n, double* out) const;

    // Accumulate dL/dparams into grad (size n_params) given dL/dout;
    // recomputes activations chunk by chunk to bound memory.
    void backward(const double* enc, std::size_t n, const double* grad_out,
                  double* grad_params) const;

private:
    struct Layer {
        int in = 0, out = 0;
        std::size_t w_off = 0, b_off = 0;  // offsets into the flat parameter vector
        bool skip = false;                 // encoding concatenated to this layer's input
    };

    void build_layout();
    void forward_chunk(const double* enc, std::size_t n, std::vector<std::vector<double>>& pre,
                       std::vector<std::vector<double>>& post) const;

    FieldSpec spec_;
    std::vector<Layer> layers_;
    std::vector<double> params_;
};

}  // namespace cocoa
