#include "tinyzone/engine.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "tinyzone/bytes.hpp"
#include "tinyzone/tinymath.hpp"

namespace tinyzone {

namespace {

// Local splitmix-based generator for the legacy init path.
struct InitRng {
    std::uint64_t state;

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    double uniform01() {  // (0, 1]
        return (static_cast<double>(next() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
    }
};

// Box-Muller normal deviate; this is the math-heavy step the default build
// path skips entirely.
float normal_deviate(InitRng& rng) {
    double u1 = rng.uniform01();
    double u2 = rng.uniform01();
    double mag = t_sqrt(-2.0 * t_log(u1));
    return static_cast<float>(mag * t_sin(6.283185307179586 * u2) * 0.01);
}

void fill_random(std::vector<float>& v, InitRng& rng) {
    for (float& f : v) f = normal_deviate(rng);
}

float apply_activation(Activation a, float x) {
    switch (a) {
        case Activation::relu: return x > 0.0f ? x : 0.0f;
        case Activation::leaky: return x > 0.0f ? x : kLeakySlope * x;
        case Activation::linear: return x;
    }
    return x;
}

void activate(std::vector<float>& v, Activation a) {
    if (a == Activation::linear) return;
    for (float& x : v) x = apply_activation(a, x);
}

void allocate_params(Layer& layer, bool legacy_random_init, InitRng& rng) {
    const LayerSpec& s = layer.spec;
    if (s.kind == LayerKind::convolutional) {
        std::size_t wlen = static_cast<std::size_t>(s.filters) * (layer.dims.in_c / s.groups) *
                           s.size * s.size;
        layer.weights.assign(wlen, 0.0f);
        layer.biases.assign(s.filters, 0.0f);
        if (s.batch_normalize) {
            layer.scales.assign(s.filters, 0.0f);
            layer.rolling_mean.assign(s.filters, 0.0f);
            layer.rolling_variance.assign(s.filters, 0.0f);
        }
    } else if (s.kind == LayerKind::connected) {
        std::size_t inputs = static_cast<std::size_t>(layer.dims.in_c) * layer.dims.in_h * layer.dims.in_w;
        layer.weights.assign(inputs * s.outputs, 0.0f);
        layer.biases.assign(s.outputs, 0.0f);
    }
    if (legacy_random_init && is_weighted(s.kind)) {
        fill_random(layer.weights, rng);
        fill_random(layer.biases, rng);
        fill_random(layer.scales, rng);
        fill_random(layer.rolling_mean, rng);
        fill_random(layer.rolling_variance, rng);
    }
}

} // namespace

Network make_network(int c, int h, int w) {
    if (c <= 0 || h <= 0 || w <= 0) throw ShapeError("network input dims must be positive");
    Network net;
    net.in_c = c;
    net.in_h = h;
    net.in_w = w;
    return net;
}

void append_layer(Network& net, const LayerSpec& spec, bool legacy_random_init) {
    std::vector<LayerDims> prev;
    prev.reserve(net.layers.size());
    for (const Layer& l : net.layers) prev.push_back(l.dims);

    Layer layer;
    layer.spec = spec;
    layer.dims = resolve_layer(spec, net.layers.size(), prev, net.in_c, net.in_h, net.in_w);
    layer.output.assign(layer.out_size(), 0.0f);
    layer.loaded = !is_weighted(spec.kind);

    InitRng rng{0x7a6e5d4c00000000ULL + net.layers.size()};
    allocate_params(layer, legacy_random_init, rng);

    if (layer.dims.workspace_floats > net.workspace.size())
        net.workspace.resize(layer.dims.workspace_floats, 0.0f);
    net.layers.push_back(std::move(layer));
}

Network build_network(const NetworkSpec& spec, bool legacy_random_init) {
    Network net = make_network(spec.c, spec.h, spec.w);
    for (const LayerSpec& l : spec.layers) append_layer(net, l, legacy_random_init);
    return net;
}

std::uint64_t expected_weight_bytes(const Network& net, std::size_t layer_index) {
    if (layer_index >= net.layers.size()) throw Error("layer index out of range");
    const Layer& l = net.layers[layer_index];
    return 4 * layer_param_count(l.spec, l.dims.in_c, l.dims.in_h, l.dims.in_w);
}

void load_layer_weights(Network& net, std::size_t layer_index, std::span<const std::uint8_t> bytes) {
    if (layer_index >= net.layers.size())
        throw Error("load_layer_weights: layer index " + std::to_string(layer_index) + " out of range");
    Layer& layer = net.layers[layer_index];
    if (!is_weighted(layer.spec.kind))
        throw FormatError("load_layer_weights: layer " + std::to_string(layer_index) + " has no parameters");

    std::uint64_t expected = expected_weight_bytes(net, layer_index);
    if (bytes.size() != expected)
        throw FormatError("load_layer_weights: layer " + std::to_string(layer_index) + " expects " +
                          std::to_string(expected) + " bytes, got " + std::to_string(bytes.size()));

    ByteReader r(bytes);
    auto fill = [&](std::vector<float>& dst) {
        for (float& f : dst) f = r.f32le();
    };
    // Stream order is a protocol constant: biases, (scales, mean, variance,)
    // weights.
    fill(layer.biases);
    if (layer.spec.batch_normalize) {
        fill(layer.scales);
        fill(layer.rolling_mean);
        fill(layer.rolling_variance);
    }
    fill(layer.weights);
    layer.loaded = true;
}

void im2col_into(const float* input, int c, int h, int w, int size, int stride, int pad, float* out) {
    int out_h = (h + 2 * pad - size) / stride + 1;
    int out_w = (w + 2 * pad - size) / stride + 1;
    std::size_t col = 0;
    for (int ch = 0; ch < c; ++ch) {
        for (int kh = 0; kh < size; ++kh) {
            for (int kw = 0; kw < size; ++kw) {
                for (int oy = 0; oy < out_h; ++oy) {
                    for (int ox = 0; ox < out_w; ++ox) {
                        int iy = oy * stride + kh - pad;
                        int ix = ox * stride + kw - pad;
                        float v = 0.0f;
                        if (iy >= 0 && iy < h && ix >= 0 && ix < w)
                            v = input[(static_cast<std::size_t>(ch) * h + iy) * w + ix];
                        out[col++] = v;
                    }
                }
            }
        }
    }
}

Matrix im2col(const Tensor& input, int size, int stride, int pad) {
    if (size <= 0 || stride <= 0 || pad < 0) throw ShapeError("im2col: bad window parameters");
    int out_h = (input.h + 2 * pad - size) / stride + 1;
    int out_w = (input.w + 2 * pad - size) / stride + 1;
    if (input.h + 2 * pad < size || input.w + 2 * pad < size || out_h < 1 || out_w < 1)
        throw ShapeError("im2col: degenerate output dims");
    Matrix m(input.c * size * size, out_h * out_w);
    im2col_into(input.data.data(), input.c, input.h, input.w, size, stride, pad, m.data.data());
    return m;
}

void gemm_into(int m, int n, int k, const float* a, const float* b, float beta, float* c) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            float sum = 0.0f;
            for (int kk = 0; kk < k; ++kk)
                sum += a[static_cast<std::size_t>(i) * k + kk] * b[static_cast<std::size_t>(kk) * n + j];
            float& out = c[static_cast<std::size_t>(i) * n + j];
            out = sum + beta * out;
        }
    }
}

Matrix gemm(const Matrix& a, const Matrix& b, float beta, Matrix c) {
    if (a.cols != b.rows) throw ShapeError("gemm: inner dims mismatch");
    if (c.rows != a.rows || c.cols != b.cols) {
        if (beta != 0.0f) throw ShapeError("gemm: accumulator dims mismatch");
        c = Matrix(a.rows, b.cols);
    }
    gemm_into(a.rows, b.cols, a.cols, a.data.data(), b.data.data(), beta, c.data.data());
    return c;
}

namespace {

void forward_convolutional(Network& net, Layer& layer, const Tensor& input) {
    const LayerSpec& s = layer.spec;
    const LayerDims& d = layer.dims;
    int group_in = d.in_c / s.groups;
    int group_out = s.filters / s.groups;
    int out_hw = d.out_h * d.out_w;
    int k = group_in * s.size * s.size;

    if (net.workspace.size() < static_cast<std::size_t>(k) * out_hw)
        net.workspace.resize(static_cast<std::size_t>(k) * out_hw, 0.0f);

    for (int g = 0; g < s.groups; ++g) {
        const float* in = input.data.data() + static_cast<std::size_t>(g) * group_in * d.in_h * d.in_w;
        im2col_into(in, group_in, d.in_h, d.in_w, s.size, s.stride, s.pad, net.workspace.data());
        const float* a = layer.weights.data() + static_cast<std::size_t>(g) * group_out * k;
        float* c = layer.output.data() + static_cast<std::size_t>(g) * group_out * out_hw;
        gemm_into(group_out, out_hw, k, a, net.workspace.data(), 0.0f, c);
    }

    if (s.batch_normalize) {
        for (int f = 0; f < s.filters; ++f) {
            float denom = t_sqrtf(layer.rolling_variance[f] + kBatchnormEpsilon);
            float scale = layer.scales[f];
            float mean = layer.rolling_mean[f];
            float bias = layer.biases[f];
            float* o = layer.output.data() + static_cast<std::size_t>(f) * out_hw;
            for (int i = 0; i < out_hw; ++i) o[i] = scale * (o[i] - mean) / denom + bias;
        }
    } else {
        for (int f = 0; f < s.filters; ++f) {
            float bias = layer.biases[f];
            float* o = layer.output.data() + static_cast<std::size_t>(f) * out_hw;
            for (int i = 0; i < out_hw; ++i) o[i] += bias;
        }
    }
    activate(layer.output, s.activation);
}

void forward_maxpool(Layer& layer, const Tensor& input) {
    const LayerSpec& s = layer.spec;
    const LayerDims& d = layer.dims;
    for (int ch = 0; ch < d.out_c; ++ch) {
        for (int oy = 0; oy < d.out_h; ++oy) {
            for (int ox = 0; ox < d.out_w; ++ox) {
                float best = std::numeric_limits<float>::lowest();
                for (int ky = 0; ky < s.size; ++ky) {
                    for (int kx = 0; kx < s.size; ++kx) {
                        int iy = oy * s.stride + ky - s.pad;
                        int ix = ox * s.stride + kx - s.pad;
                        if (iy < 0 || iy >= d.in_h || ix < 0 || ix >= d.in_w) continue;
                        best = std::max(best, input.at(ch, iy, ix));
                    }
                }
                layer.output[(static_cast<std::size_t>(ch) * d.out_h + oy) * d.out_w + ox] = best;
            }
        }
    }
}

void forward_avgpool(Layer& layer, const Tensor& input) {
    const LayerDims& d = layer.dims;
    int hw = d.in_h * d.in_w;
    for (int ch = 0; ch < d.in_c; ++ch) {
        float sum = 0.0f;
        const float* in = input.data.data() + static_cast<std::size_t>(ch) * hw;
        for (int i = 0; i < hw; ++i) sum += in[i];
        layer.output[ch] = sum / static_cast<float>(hw);
    }
}

void forward_connected(Layer& layer, const Tensor& input) {
    const LayerSpec& s = layer.spec;
    int inputs = static_cast<int>(input.size());
    gemm_into(s.outputs, 1, inputs, layer.weights.data(), input.data.data(), 0.0f,
              layer.output.data());
    for (int i = 0; i < s.outputs; ++i) layer.output[i] += layer.biases[i];
    activate(layer.output, s.activation);
}

void forward_softmax(Layer& layer, const Tensor& input) {
    float max_v = std::numeric_limits<float>::lowest();
    for (float x : input.data) max_v = std::max(max_v, x);
    float sum = 0.0f;
    for (std::size_t i = 0; i < input.size(); ++i) {
        float arg = input.data[i] - max_v;
        // arg <= 0 after the max shift; below the exp domain it underflows
        // to zero in float regardless.
        float e = arg <= -700.0f ? 0.0f : t_expf(arg);
        layer.output[i] = e;
        sum += e;
    }
    for (float& x : layer.output) x /= sum;
}

void forward_shortcut(Network& net, Layer& layer, const Tensor& input) {
    const Layer& from = net.layers[static_cast<std::size_t>(layer.spec.from)];
    for (std::size_t i = 0; i < layer.output.size(); ++i)
        layer.output[i] = input.data[i] + from.output[i];
    activate(layer.output, layer.spec.activation);
}

} // namespace

Tensor forward_layer(Network& net, std::size_t layer_index, const Tensor& input) {
    if (layer_index >= net.layers.size()) throw Error("forward_layer: layer index out of range");
    Layer& layer = net.layers[layer_index];
    if (is_weighted(layer.spec.kind) && !layer.loaded)
        throw ProtocolError("forward_layer: layer " + std::to_string(layer_index) + " weights not loaded");
    if (input.c != layer.dims.in_c || input.h != layer.dims.in_h || input.w != layer.dims.in_w)
        throw ShapeError("forward_layer: input dims mismatch");

    switch (layer.spec.kind) {
        case LayerKind::convolutional: forward_convolutional(net, layer, input); break;
        case LayerKind::maxpool: forward_maxpool(layer, input); break;
        case LayerKind::avgpool: forward_avgpool(layer, input); break;
        case LayerKind::connected: forward_connected(layer, input); break;
        case LayerKind::softmax: forward_softmax(layer, input); break;
        case LayerKind::shortcut: forward_shortcut(net, layer, input); break;
    }

    Tensor out(layer.dims.out_c, layer.dims.out_h, layer.dims.out_w);
    out.data = layer.output;
    return out;
}

Tensor forward(Network& net, const Tensor& input) {
    if (input.c != net.in_c || input.h != net.in_h || input.w != net.in_w)
        throw ShapeError("forward: input dims mismatch");
    if (!net.weights_complete()) throw ProtocolError("forward: weights not fully loaded");

    Tensor current = input;
    for (std::size_t i = 0; i < net.layers.size(); ++i) current = forward_layer(net, i, current);
    return current;
}

std::vector<std::pair<std::string, float>> top_k(const Tensor& probs,
                                                 const std::vector<std::string>& labels,
                                                 std::size_t k) {
    if (labels.size() != probs.size())
        throw DomainError("top_k: labels length does not match probabilities");
    if (k < 1 || k > probs.size()) throw DomainError("top_k: k out of range");

    std::vector<std::size_t> idx(probs.size());
    std::iota(idx.begin(), idx.end(), 0);
    // Ties break toward the lower index.
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return probs.data[a] > probs.data[b];
    });

    std::vector<std::pair<std::string, float>> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.emplace_back(labels[idx[i]], probs.data[idx[i]]);
    return out;
}

} // namespace tinyzone
