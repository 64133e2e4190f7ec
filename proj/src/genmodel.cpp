#include "tinyzone/genmodel.hpp"

#include "tinyzone/bytes.hpp"

namespace tinyzone {

namespace {

struct Rng {
    std::uint64_t state;

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    int range(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    float uniform(float lo, float hi) {
        double u = static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
        return lo + static_cast<float>(u * (hi - lo));
    }
    bool coin() { return (next() & 1) != 0; }
};

void push_floats(std::vector<std::uint8_t>& out, std::size_t n, Rng& rng, float lo, float hi) {
    for (std::size_t i = 0; i < n; ++i) put_f32le(out, rng.uniform(lo, hi));
}

std::vector<std::uint8_t> layer_payload(const LayerSpec& spec, int in_c, Rng& rng) {
    std::vector<std::uint8_t> out;
    if (spec.kind == LayerKind::convolutional) {
        std::size_t wlen = static_cast<std::size_t>(spec.filters) * (in_c / spec.groups) *
                           spec.size * spec.size;
        if (spec.batch_normalize) {
            push_floats(out, spec.filters, rng, -0.5f, 0.5f);  // biases
            push_floats(out, spec.filters, rng, 0.5f, 1.5f);   // scales
            push_floats(out, spec.filters, rng, -0.5f, 0.5f);  // rolling_mean
            push_floats(out, spec.filters, rng, 0.5f, 2.0f);   // rolling_variance > 0
        } else {
            push_floats(out, spec.filters, rng, -0.5f, 0.5f);
        }
        push_floats(out, wlen, rng, -1.0f, 1.0f);
    }
    return out;
}

} // namespace

std::vector<std::uint8_t> random_layer_payload(const LayerSpec& spec, int in_c, int in_h, int in_w,
                                               std::uint64_t seed) {
    Rng rng{seed};
    if (spec.kind == LayerKind::connected) {
        std::vector<std::uint8_t> out;
        std::size_t inputs = static_cast<std::size_t>(in_c) * in_h * in_w;
        push_floats(out, spec.outputs, rng, -0.5f, 0.5f);
        push_floats(out, inputs * spec.outputs, rng, -1.0f, 1.0f);
        return out;
    }
    return layer_payload(spec, in_c, rng);
}

GeneratedModel gen_model(std::uint64_t seed, int layer_count) {
    if (layer_count < 1) throw DomainError("gen_model: need at least one layer");
    Rng rng{seed};

    GeneratedModel gen;
    gen.spec.c = 3;
    gen.spec.h = rng.range(2, 6) * 4;
    gen.spec.w = gen.spec.h;

    int c = gen.spec.c, h = gen.spec.h, w = gen.spec.w;
    for (int i = 0; i < layer_count; ++i) {
        LayerSpec layer;
        int pick = rng.range(0, 5);
        bool did_shortcut = false;
        if (pick == 5 && gen.spec.layers.size() >= 2) {
            // Shortcut back to an earlier layer with identical dims, if any.
            for (int j = static_cast<int>(gen.spec.layers.size()) - 2; j >= 0; --j) {
                auto dims = resolve_shapes(gen.spec);
                if (dims[j].out_c == c && dims[j].out_h == h && dims[j].out_w == w) {
                    layer.kind = LayerKind::shortcut;
                    layer.from = j;
                    layer.activation = rng.coin() ? Activation::relu : Activation::linear;
                    did_shortcut = true;
                    break;
                }
            }
        }
        if (!did_shortcut) {
            if (pick == 4 && h >= 4 && w >= 4) {
                layer.kind = LayerKind::maxpool;
                layer.size = 2;
                layer.stride = 2;
                h = (h - 2) / 2 + 1;
                w = (w - 2) / 2 + 1;
            } else {
                layer.kind = LayerKind::convolutional;
                bool depthwise = rng.coin() && c > 1;
                layer.filters = depthwise ? c : rng.range(2, 8);
                layer.groups = depthwise ? c : 1;
                layer.size = rng.coin() ? 3 : 1;
                layer.pad = layer.size / 2;
                layer.stride = 1;
                layer.batch_normalize = rng.coin();
                layer.activation = static_cast<Activation>(rng.range(0, 2));
                c = layer.filters;
            }
        }
        gen.spec.layers.push_back(layer);
    }

    LayerSpec head;
    head.kind = LayerKind::connected;
    head.outputs = rng.range(4, 10);
    head.activation = Activation::linear;
    gen.spec.layers.push_back(head);

    LayerSpec softmax;
    softmax.kind = LayerKind::softmax;
    gen.spec.layers.push_back(softmax);

    auto dims = resolve_shapes(gen.spec);
    for (std::size_t i = 0; i < gen.spec.layers.size(); ++i) {
        const LayerSpec& l = gen.spec.layers[i];
        if (!is_weighted(l.kind)) continue;
        gen.weights.layer_payloads.push_back(
            random_layer_payload(l, dims[i].in_c, dims[i].in_h, dims[i].in_w, rng.next()));
    }
    return gen;
}

} // namespace tinyzone
