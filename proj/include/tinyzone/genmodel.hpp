#pragma once

#include <cstdint>

#include "tinyzone/client.hpp"
#include "tinyzone/netspec.hpp"

// Seeded generator of shape-valid random models plus matching weights, for
// property tests and CLI fixtures.

namespace tinyzone {

struct GeneratedModel {
    NetworkSpec spec;
    WeightFile weights;
};

// layer_count counts the body layers; a softmax head is always appended.
GeneratedModel gen_model(std::uint64_t seed, int layer_count);

// Weight payload for one layer in protocol order, batchnorm statistics kept
// in a numerically safe range.
std::vector<std::uint8_t> random_layer_payload(const LayerSpec& spec, int in_c, int in_h, int in_w,
                                               std::uint64_t seed);

} // namespace tinyzone
