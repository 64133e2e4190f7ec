#include "doctest.h"

#include <random>

#include "test_util.hpp"
#include "tinyzone/crypto.hpp"

using namespace tinyzone;

namespace {

// Independent splitmix64 reference, kept deliberately separate from the
// library implementation.
struct ReferenceSplitmix {
    std::uint64_t x;
    std::uint64_t next() {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

} // namespace

TEST_CASE("keystream matches the splitmix64 reference") {
    // Published splitmix64 test vectors for seed 0.
    Keystream ks(0, 0);
    CHECK(ks.next_block() == 0xE220A8397B1DCDAFULL);
    CHECK(ks.next_block() == 0x6E789E6AA1B965F4ULL);
    CHECK(ks.next_block() == 0x06C45D188009454FULL);

    ReferenceSplitmix ref{0xdeadbeefcafef00dULL};
    Keystream ks2(0xdeadbeef00000000ULL, 0x00000000cafef00dULL);  // key ^ nonce = seed
    for (int i = 0; i < 64; ++i) CHECK(ks2.next_block() == ref.next());
}

TEST_CASE("keystream bytes are the block in little-endian order") {
    Keystream ks(0, 0);
    std::uint64_t block = 0xE220A8397B1DCDAFULL;
    for (int i = 0; i < 8; ++i)
        CHECK(ks.next_byte() == static_cast<std::uint8_t>(block >> (8 * i)));
}

TEST_CASE("fnv1a64 known vectors") {
    CHECK(fnv1a64({}) == 0xcbf29ce484222325ULL);
    std::vector<std::uint8_t> a = {'a'};
    CHECK(fnv1a64(a) == 0xaf63dc4c8601ec8cULL);
    std::vector<std::uint8_t> foobar = {'f', 'o', 'o', 'b', 'a', 'r'};
    CHECK(fnv1a64(foobar) == 0x85944171f73967e8ULL);
}

TEST_CASE("encrypt of zero bytes under zero key equals the keystream") {
    std::vector<std::uint8_t> plain(8, 0);
    EncryptedBlob blob = encrypt_bytes(plain, 0, 0);
    std::uint64_t block = 0xE220A8397B1DCDAFULL;
    for (int i = 0; i < 8; ++i)
        CHECK(blob.ciphertext[i] == static_cast<std::uint8_t>(block >> (8 * i)));
    CHECK(blob.checksum == fnv1a64(plain));
}

TEST_CASE("round trip over random payloads and keys") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t len = rng() % 400;
        std::vector<std::uint8_t> plain(len);
        for (auto& b : plain) b = static_cast<std::uint8_t>(rng());
        std::uint64_t key = rng(), nonce = rng();

        EncryptedBlob blob = encrypt_bytes(plain, key, nonce);
        CHECK(decrypt_blob(blob, key) == plain);

        EncryptedBlob other = encrypt_bytes(plain, key, nonce + 1);
        if (!plain.empty()) CHECK(other.ciphertext != blob.ciphertext);
    }
}

TEST_CASE("any single flipped ciphertext bit is detected") {
    std::mt19937_64 rng(11);
    std::vector<std::uint8_t> plain(257);
    for (auto& b : plain) b = static_cast<std::uint8_t>(rng());
    EncryptedBlob blob = encrypt_bytes(plain, 42, 43);

    for (int trial = 0; trial < 200; ++trial) {
        EncryptedBlob tampered = blob;
        std::size_t bit = rng() % (tampered.ciphertext.size() * 8);
        tampered.ciphertext[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        CHECK_THROWS_AS(decrypt_blob(tampered, 42), IntegrityError);
    }
}

TEST_CASE("wrong key is detected") {
    std::vector<std::uint8_t> plain = {1, 2, 3, 4, 5};
    EncryptedBlob blob = encrypt_bytes(plain, 100, 7);
    CHECK_THROWS_AS(decrypt_blob(blob, 101), IntegrityError);
}

TEST_CASE("container image round trip and framing") {
    std::vector<std::uint8_t> plain = {9, 8, 7};
    EncryptedBlob blob = encrypt_bytes(plain, 5, 6);
    auto image = blob_to_bytes(blob);
    CHECK(image.size() == 20 + plain.size());
    CHECK(image[0] == 'T');
    CHECK(image[3] == 'E');

    EncryptedBlob back = blob_from_bytes(image);
    CHECK(back.nonce == blob.nonce);
    CHECK(back.checksum == blob.checksum);
    CHECK(back.ciphertext == blob.ciphertext);

    image[0] = 'X';
    CHECK_THROWS_AS(blob_from_bytes(image), FormatError);
    std::vector<std::uint8_t> tiny = {'T', 'Z', 'W', 'E', 0, 0};
    CHECK_THROWS_AS(blob_from_bytes(tiny), FormatError);
}
