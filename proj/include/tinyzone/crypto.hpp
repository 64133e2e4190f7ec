#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tinyzone/error.hpp"

// Weight-provisioning cipher. This is transport plumbing for the simulator,
// not hardened cryptography: a splitmix64 keystream XOR plus an FNV-1a-64
// integrity checksum over the plaintext, wrapped in a small "TZWE" container.

namespace tinyzone {

constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// Block generator: state += golden gamma, then the splitmix64 finalizer.
class Keystream {
public:
    Keystream(std::uint64_t key, std::uint64_t nonce) : state_(key ^ nonce) {}

    std::uint64_t next_block() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Keystream bytes come from each block in little-endian order.
    std::uint8_t next_byte() {
        if (byte_index_ == 0) block_ = next_block();
        std::uint8_t b = static_cast<std::uint8_t>(block_ >> (8 * byte_index_));
        byte_index_ = (byte_index_ + 1) % 8;
        return b;
    }

private:
    std::uint64_t state_;
    std::uint64_t block_ = 0;
    int byte_index_ = 0;
};

std::uint64_t fnv1a64(std::span<const std::uint8_t> data);

struct EncryptedBlob {
    std::uint64_t nonce = 0;
    std::vector<std::uint8_t> ciphertext;
    std::uint64_t checksum = 0;  // FNV-1a-64 over the plaintext
};

EncryptedBlob encrypt_bytes(std::span<const std::uint8_t> plaintext, std::uint64_t key,
                            std::uint64_t nonce);

// Throws IntegrityError when the checksum does not match the decrypted bytes.
std::vector<std::uint8_t> decrypt_blob(const EncryptedBlob& blob, std::uint64_t key);

// Container image: magic "TZWE", u64-LE nonce, ciphertext, u64-LE checksum.
std::vector<std::uint8_t> blob_to_bytes(const EncryptedBlob& blob);
EncryptedBlob blob_from_bytes(std::span<const std::uint8_t> bytes);

} // namespace tinyzone
