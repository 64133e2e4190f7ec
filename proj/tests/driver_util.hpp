#pragma once

#include <vector>

#include "tinyzone/bytes.hpp"
#include "tinyzone/client.hpp"
#include "tinyzone/genmodel.hpp"
#include "tinyzone/memlayout.hpp"
#include "tinyzone/worldsim.hpp"

// Session plumbing shared by the worldsim tests and the acceptance suite.

namespace testutil {

inline tinyzone::MemoryPlan make_plan(std::uint64_t shm_bytes,
                                      std::uint64_t tee_bytes = 64ull * 1024 * 1024) {
    return tinyzone::plan_layout(2048ull * 1024 * 1024, tee_bytes, shm_bytes);
}

inline tinyzone::EncryptedBlob encrypt_model(const tinyzone::GeneratedModel& gen,
                                             std::uint64_t key, std::uint64_t nonce) {
    return tinyzone::encrypt_weights(tinyzone::weight_file_to_bytes(gen.weights), key, nonce);
}

// Re-serializes what the TA actually loaded, in protocol order, so it can be
// compared byte-for-byte with the original weight payloads.
inline std::vector<std::vector<std::uint8_t>> reconstruct_loaded_payloads(
    const tinyzone::Network& net) {
    std::vector<std::vector<std::uint8_t>> out;
    for (const tinyzone::Layer& l : net.layers) {
        if (!tinyzone::is_weighted(l.spec.kind)) continue;
        std::vector<std::uint8_t> payload;
        auto append = [&](const std::vector<float>& v) {
            for (float f : v) tinyzone::put_f32le(payload, f);
        };
        append(l.biases);
        if (l.spec.batch_normalize) {
            append(l.scales);
            append(l.rolling_mean);
            append(l.rolling_variance);
        }
        append(l.weights);
        out.push_back(std::move(payload));
    }
    return out;
}

} // namespace testutil
