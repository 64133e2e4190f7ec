#include "tinyzone/crypto.hpp"

#include "tinyzone/bytes.hpp"
#include "tinyzone/error.hpp"

namespace tinyzone {

std::uint64_t fnv1a64(std::span<const std::uint8_t> data) {
    std::uint64_t h = kFnvOffsetBasis;
    for (std::uint8_t b : data) {
        h ^= b;
        h *= kFnvPrime;
    }
    return h;
}

EncryptedBlob encrypt_bytes(std::span<const std::uint8_t> plaintext, std::uint64_t key,
                            std::uint64_t nonce) {
    EncryptedBlob blob;
    blob.nonce = nonce;
    blob.checksum = fnv1a64(plaintext);
    blob.ciphertext.resize(plaintext.size());
    Keystream ks(key, nonce);
    for (std::size_t i = 0; i < plaintext.size(); ++i)
        blob.ciphertext[i] = plaintext[i] ^ ks.next_byte();
    return blob;
}

std::vector<std::uint8_t> decrypt_blob(const EncryptedBlob& blob, std::uint64_t key) {
    std::vector<std::uint8_t> plain(blob.ciphertext.size());
    Keystream ks(key, blob.nonce);
    for (std::size_t i = 0; i < plain.size(); ++i)
        plain[i] = blob.ciphertext[i] ^ ks.next_byte();
    if (fnv1a64(plain) != blob.checksum)
        throw IntegrityError("weight blob checksum mismatch");
    return plain;
}

std::vector<std::uint8_t> blob_to_bytes(const EncryptedBlob& blob) {
    std::vector<std::uint8_t> out;
    out.reserve(20 + blob.ciphertext.size());
    out.insert(out.end(), {'T', 'Z', 'W', 'E'});
    put_u64le(out, blob.nonce);
    out.insert(out.end(), blob.ciphertext.begin(), blob.ciphertext.end());
    put_u64le(out, blob.checksum);
    return out;
}

EncryptedBlob blob_from_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 20) throw FormatError("encrypted container too short");
    if (bytes[0] != 'T' || bytes[1] != 'Z' || bytes[2] != 'W' || bytes[3] != 'E')
        throw FormatError("bad encrypted container magic");
    ByteReader r(bytes.subspan(4));
    EncryptedBlob blob;
    blob.nonce = r.u64le();
    std::size_t ct_len = bytes.size() - 20;
    auto ct = r.bytes(ct_len);
    blob.ciphertext.assign(ct.begin(), ct.end());
    blob.checksum = r.u64le();
    return blob;
}

} // namespace tinyzone
