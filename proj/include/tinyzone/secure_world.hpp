#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tinyzone/engine.hpp"
#include "tinyzone/wire.hpp"

// The trusted-application side of the session: builds the network layer by
// layer, accumulates the encrypted weight stream, decrypts and fills the
// layers, runs inference and hands back an encrypted result. Decrypted weight
// bytes only ever live in buffers owned by this object.

namespace tinyzone {

class SecureWorld {
public:
    explicit SecureWorld(std::uint64_t device_key, bool legacy_random_init = false)
        : key_(device_key), legacy_init_(legacy_random_init) {}

    // Dispatch for one invoke; payload is a view of the shared buffer.
    std::vector<std::uint8_t> handle(TaCommand cmd, std::span<const std::uint8_t> payload);

    // Wipes network parameters and any staged plaintext.
    void destroy();

    bool network_built() const { return network_.has_value(); }
    bool weights_complete() const { return network_ && network_->weights_complete() && stream_done_; }
    const Network* network() const { return network_ ? &*network_ : nullptr; }

private:
    std::vector<std::uint8_t> on_build_layer(std::span<const std::uint8_t> payload);
    std::vector<std::uint8_t> on_weight_chunk(std::span<const std::uint8_t> payload);
    std::vector<std::uint8_t> on_send_input(std::span<const std::uint8_t> payload);
    std::vector<std::uint8_t> on_infer();
    std::vector<std::uint8_t> on_fetch_result();

    std::uint64_t expected_stream_bytes() const;
    void finalize_weights();

    std::uint64_t key_;
    bool legacy_init_ = false;
    std::optional<Network> network_;
    bool building_ = true;                    // build phase ends at the first weight chunk
    std::vector<std::uint8_t> weight_stream_; // accumulated encrypted container image
    bool stream_done_ = false;
    std::optional<Tensor> input_;
    std::optional<Tensor> output_;
};

} // namespace tinyzone
