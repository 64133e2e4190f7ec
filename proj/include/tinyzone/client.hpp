#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tinyzone/crypto.hpp"
#include "tinyzone/netspec.hpp"
#include "tinyzone/tensor.hpp"
#include "tinyzone/worldsim.hpp"

// Normal-world client: parses model configs, packages and encrypts weights,
// loads PPM images, and drives a session through the build / stream / infer
// protocol.

namespace tinyzone {

// INI-style model config. Sections: net, convolutional, maxpool, avgpool,
// connected, softmax, shortcut. '#' starts a comment. Defaults: stride=1,
// pad=0, groups=1, activation=linear, batch_normalize=0.
NetworkSpec parse_cfg(const std::string& text);
std::string serialize_cfg(const NetworkSpec& spec);
NetworkSpec load_cfg_file(const std::string& path);

// Cleartext weight container: magic "TZWT", u32 version, u32 layer count,
// then per weighted layer a u32 byte length plus raw little-endian floats.
struct WeightFile {
    std::vector<std::vector<std::uint8_t>> layer_payloads;
};

std::vector<std::uint8_t> weight_file_to_bytes(const WeightFile& wf);
WeightFile weight_file_from_bytes(std::span<const std::uint8_t> bytes);
void validate_weights(const NetworkSpec& spec, const WeightFile& wf);

// 8-bit RGB source image (PPM P6 only).
struct Image {
    int w = 0, h = 0;
    std::vector<std::uint8_t> rgb;  // interleaved, h*w*3
};

Image read_ppm(std::span<const std::uint8_t> bytes);
Image read_ppm_file(const std::string& path);
std::vector<std::uint8_t> write_ppm(const Image& img);

// Pixels / 255 into a CHW tensor.
Tensor image_to_tensor(const Image& img);
// Corner-aligned bilinear resize; identity when dims already match.
Tensor bilinear_resize(const Tensor& src, int out_h, int out_w);
// read + normalize + resize to the network input dims.
Tensor load_image(const std::string& path, int c, int h, int w);

EncryptedBlob encrypt_weights(std::span<const std::uint8_t> weight_file_bytes, std::uint64_t key,
                              std::uint64_t nonce);

// Remote driver -------------------------------------------------------------

// One build invoke per layer; records carry the client-resolved input dims.
void build_remote_network(Session& session, const NetworkSpec& spec);

// Streams the encrypted container image in ceil(total/chunk) weight-chunk
// invokes. chunk_bytes = 0 means "use the shared memory size".
std::size_t stream_weights(Session& session, const NetworkSpec& spec, const EncryptedBlob& blob,
                           std::size_t chunk_bytes = 0);

void send_input(Session& session, const Tensor& input);
void run_infer(Session& session);
// Fetches the encrypted result and decrypts it client-side.
Tensor fetch_result(Session& session, std::uint64_t key);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

} // namespace tinyzone
