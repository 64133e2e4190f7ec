#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tinyzone/netspec.hpp"
#include "tinyzone/tensor.hpp"

// Secure-side inference engine: network construction without random
// initialization, layer-wise weight loading, im2col+gemm convolution,
// batch normalization, pooling, shortcut, softmax and top-k. Single
// threaded by design so forward passes are bitwise repeatable.

namespace tinyzone {

constexpr float kBatchnormEpsilon = 1e-6f;
constexpr float kLeakySlope = 0.1f;

struct Layer {
    LayerSpec spec;
    LayerDims dims;
    std::vector<float> weights;
    std::vector<float> biases;
    std::vector<float> scales;
    std::vector<float> rolling_mean;
    std::vector<float> rolling_variance;
    std::vector<float> output;
    bool loaded = false;  // weighted layers start unloaded

    std::size_t out_size() const {
        return static_cast<std::size_t>(dims.out_c) * dims.out_h * dims.out_w;
    }
};

struct Network {
    int in_c = 0, in_h = 0, in_w = 0;
    std::vector<Layer> layers;
    std::vector<float> workspace;

    bool weights_complete() const {
        for (const Layer& l : layers)
            if (is_weighted(l.spec.kind) && !l.loaded) return false;
        return true;
    }
};

struct Matrix {
    int rows = 0, cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0f) {}
    float& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    float at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// Incremental construction; the TA builds one layer per invoke.
Network make_network(int c, int h, int w);
void append_layer(Network& net, const LayerSpec& spec, bool legacy_random_init);

// Default mode leaves parameters zeroed; legacy mode reproduces the
// framework habit of normal-distributed init (benchmark path only, the
// loaded weights overwrite it either way).
Network build_network(const NetworkSpec& spec, bool legacy_random_init);

std::uint64_t expected_weight_bytes(const Network& net, std::size_t layer_index);
void load_layer_weights(Network& net, std::size_t layer_index, std::span<const std::uint8_t> bytes);

// Rows enumerate (channel, kh, kw); columns enumerate output positions
// row-major; padded reads yield zero.
Matrix im2col(const Tensor& input, int size, int stride, int pad);
void im2col_into(const float* input, int c, int h, int w, int size, int stride, int pad, float* out);

// C <- A*B + beta*C with the k loop innermost.
Matrix gemm(const Matrix& a, const Matrix& b, float beta, Matrix c);
void gemm_into(int m, int n, int k, const float* a, const float* b, float beta, float* c);

Tensor forward_layer(Network& net, std::size_t layer_index, const Tensor& input);
Tensor forward(Network& net, const Tensor& input);

std::vector<std::pair<std::string, float>> top_k(const Tensor& probs,
                                                 const std::vector<std::string>& labels,
                                                 std::size_t k);

} // namespace tinyzone
