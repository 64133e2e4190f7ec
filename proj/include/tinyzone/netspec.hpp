#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tinyzone/error.hpp"

// Parsed model topology: layer hyperparameters only, no weights. Shared by the
// memory planner, the inference engine, the config parser and the converter.

namespace tinyzone {

enum class LayerKind : std::uint8_t {
    convolutional = 1,
    maxpool = 2,
    avgpool = 3,
    connected = 4,
    softmax = 5,
    shortcut = 6,
};

enum class Activation : std::uint8_t { linear = 0, relu = 1, leaky = 2 };

struct LayerSpec {
    LayerKind kind = LayerKind::softmax;
    int filters = 0;
    int size = 0;
    int stride = 1;
    int pad = 0;
    int groups = 1;
    bool batch_normalize = false;
    Activation activation = Activation::linear;
    int outputs = 0;  // connected
    int from = -1;    // shortcut, absolute layer index

    bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
    int c = 0, h = 0, w = 0;
    std::vector<LayerSpec> layers;

    bool operator==(const NetworkSpec&) const = default;
};

struct LayerDims {
    int in_c = 0, in_h = 0, in_w = 0;
    int out_c = 0, out_h = 0, out_w = 0;
    std::uint64_t workspace_floats = 0;  // im2col scratch, conv layers only
};

inline bool is_weighted(LayerKind kind) {
    return kind == LayerKind::convolutional || kind == LayerKind::connected;
}

// Parameter tensor lengths in stream order. With batchnorm the order is
// biases, scales, rolling_mean, rolling_variance, weights; without it,
// biases then weights. The order is a protocol constant.
inline std::uint64_t layer_param_count(const LayerSpec& spec, int in_c, int in_h, int in_w) {
    switch (spec.kind) {
        case LayerKind::convolutional: {
            std::uint64_t weights = static_cast<std::uint64_t>(spec.filters) *
                                    (in_c / spec.groups) * spec.size * spec.size;
            std::uint64_t per_filter = spec.batch_normalize ? 4u : 1u;  // bias (+ bn stats)
            return weights + per_filter * static_cast<std::uint64_t>(spec.filters);
        }
        case LayerKind::connected: {
            std::uint64_t inputs = static_cast<std::uint64_t>(in_c) * in_h * in_w;
            return inputs * spec.outputs + spec.outputs;
        }
        default:
            return 0;
    }
}

// Resolves one layer's output dims given everything before it.
inline LayerDims resolve_layer(const LayerSpec& spec, std::size_t index,
                               std::span<const LayerDims> previous, int net_c, int net_h,
                               int net_w) {
    LayerDims d;
    if (previous.empty()) {
        d.in_c = net_c;
        d.in_h = net_h;
        d.in_w = net_w;
    } else {
        const LayerDims& p = previous.back();
        d.in_c = p.out_c;
        d.in_h = p.out_h;
        d.in_w = p.out_w;
    }
    if (d.in_c <= 0 || d.in_h <= 0 || d.in_w <= 0)
        throw ShapeError("layer " + std::to_string(index) + ": unresolved input dims");

    switch (spec.kind) {
        case LayerKind::convolutional: {
            if (spec.filters <= 0 || spec.size <= 0 || spec.stride <= 0 || spec.groups <= 0)
                throw ShapeError("layer " + std::to_string(index) + ": bad conv parameters");
            if (d.in_c % spec.groups != 0 || spec.filters % spec.groups != 0)
                throw ShapeError("layer " + std::to_string(index) +
                                 ": groups must divide channels and filters");
            d.out_c = spec.filters;
            d.out_h = (d.in_h + 2 * spec.pad - spec.size) / spec.stride + 1;
            d.out_w = (d.in_w + 2 * spec.pad - spec.size) / spec.stride + 1;
            if (d.in_h + 2 * spec.pad < spec.size || d.in_w + 2 * spec.pad < spec.size ||
                d.out_h < 1 || d.out_w < 1)
                throw ShapeError("layer " + std::to_string(index) + ": degenerate conv output");
            d.workspace_floats = static_cast<std::uint64_t>(d.in_c / spec.groups) * spec.size *
                                 spec.size * d.out_h * d.out_w;
            break;
        }
        case LayerKind::maxpool: {
            if (spec.size <= 0 || spec.stride <= 0)
                throw ShapeError("layer " + std::to_string(index) + ": bad pool parameters");
            d.out_c = d.in_c;
            d.out_h = (d.in_h + 2 * spec.pad - spec.size) / spec.stride + 1;
            d.out_w = (d.in_w + 2 * spec.pad - spec.size) / spec.stride + 1;
            if (d.out_h < 1 || d.out_w < 1)
                throw ShapeError("layer " + std::to_string(index) + ": degenerate pool output");
            break;
        }
        case LayerKind::avgpool:  // global average
            d.out_c = d.in_c;
            d.out_h = 1;
            d.out_w = 1;
            break;
        case LayerKind::connected:
            if (spec.outputs <= 0)
                throw ShapeError("layer " + std::to_string(index) + ": connected needs outputs");
            d.out_c = spec.outputs;
            d.out_h = 1;
            d.out_w = 1;
            break;
        case LayerKind::softmax:
            d.out_c = d.in_c;
            d.out_h = d.in_h;
            d.out_w = d.in_w;
            break;
        case LayerKind::shortcut: {
            if (spec.from < 0 || static_cast<std::size_t>(spec.from) >= index)
                throw ShapeError("layer " + std::to_string(index) + ": shortcut from-index out of range");
            const LayerDims& f = previous[static_cast<std::size_t>(spec.from)];
            if (f.out_c != d.in_c || f.out_h != d.in_h || f.out_w != d.in_w)
                throw ShapeError("layer " + std::to_string(index) + ": shortcut dims mismatch");
            d.out_c = d.in_c;
            d.out_h = d.in_h;
            d.out_w = d.in_w;
            break;
        }
    }
    return d;
}

inline std::vector<LayerDims> resolve_shapes(const NetworkSpec& spec) {
    if (spec.c <= 0 || spec.h <= 0 || spec.w <= 0) throw ShapeError("net input dims unresolved");
    std::vector<LayerDims> dims;
    dims.reserve(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        dims.push_back(resolve_layer(spec.layers[i], i, dims, spec.c, spec.h, spec.w));
    return dims;
}

inline std::uint64_t total_param_count(const NetworkSpec& spec) {
    auto dims = resolve_shapes(spec);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        total += layer_param_count(spec.layers[i], dims[i].in_c, dims[i].in_h, dims[i].in_w);
    return total;
}

inline std::size_t weighted_layer_count(const NetworkSpec& spec) {
    std::size_t n = 0;
    for (const auto& l : spec.layers) n += is_weighted(l.kind) ? 1 : 0;
    return n;
}

} // namespace tinyzone
