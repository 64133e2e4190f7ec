#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "tinyzone/error.hpp"

// Little-endian byte packing helpers shared by the wire protocol and file formats.

namespace tinyzone {

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline void put_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f32le(std::vector<std::uint8_t>& out, float f) {
    put_u32le(out, std::bit_cast<std::uint32_t>(f));
}

// Cursor-style reader; every read is bounds checked.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t position() const { return pos_; }

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint32_t u32le() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::int32_t i32le() { return static_cast<std::int32_t>(u32le()); }
    std::uint64_t u64le() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    float f32le() { return std::bit_cast<float>(u32le()); }

    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw FormatError("byte stream truncated");
    }
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

inline std::vector<float> floats_from_le(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % 4 != 0) throw FormatError("float payload length not a multiple of 4");
    std::vector<float> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
        out[i] = std::bit_cast<float>(v);
    }
    return out;
}

inline std::vector<std::uint8_t> floats_to_le(std::span<const float> values) {
    std::vector<std::uint8_t> out;
    out.reserve(values.size() * 4);
    for (float f : values) put_f32le(out, f);
    return out;
}

} // namespace tinyzone
