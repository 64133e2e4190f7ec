#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tinyzone/bytes.hpp"
#include "tinyzone/netspec.hpp"
#include "tinyzone/tensor.hpp"

// Little-endian payload encodings for the REE<->TEE invoke channel.

namespace tinyzone {

enum class TaCommand : std::uint8_t {
    build_layer = 1,
    weight_chunk = 2,
    send_input = 3,
    infer = 4,
    fetch_result = 5,
};

// One layer per build invoke. The record declares the layer's input dims so
// the secure side can validate the chain; record 0 fixes the network input.
struct LayerRecord {
    std::uint32_t layer_index = 0;
    std::uint32_t in_c = 0, in_h = 0, in_w = 0;
    LayerSpec spec;
};

inline std::vector<std::uint8_t> encode_layer_record(const LayerRecord& rec) {
    std::vector<std::uint8_t> out;
    out.reserve(48);
    put_u32le(out, rec.layer_index);
    put_u32le(out, rec.in_c);
    put_u32le(out, rec.in_h);
    put_u32le(out, rec.in_w);
    out.push_back(static_cast<std::uint8_t>(rec.spec.kind));
    out.push_back(static_cast<std::uint8_t>(rec.spec.activation));
    out.push_back(rec.spec.batch_normalize ? 1 : 0);
    out.push_back(0);  // reserved
    put_u32le(out, static_cast<std::uint32_t>(rec.spec.filters));
    put_u32le(out, static_cast<std::uint32_t>(rec.spec.size));
    put_u32le(out, static_cast<std::uint32_t>(rec.spec.stride));
    put_u32le(out, static_cast<std::uint32_t>(rec.spec.pad));
    put_u32le(out, static_cast<std::uint32_t>(rec.spec.groups));
    put_u32le(out, static_cast<std::uint32_t>(rec.spec.outputs));
    put_u32le(out, static_cast<std::uint32_t>(rec.spec.from));
    return out;
}

inline LayerRecord decode_layer_record(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    LayerRecord rec;
    rec.layer_index = r.u32le();
    rec.in_c = r.u32le();
    rec.in_h = r.u32le();
    rec.in_w = r.u32le();
    std::uint8_t kind = r.u8();
    if (kind < 1 || kind > 6) throw FormatError("layer record: unknown kind");
    rec.spec.kind = static_cast<LayerKind>(kind);
    std::uint8_t act = r.u8();
    if (act > 2) throw FormatError("layer record: unknown activation");
    rec.spec.activation = static_cast<Activation>(act);
    rec.spec.batch_normalize = r.u8() != 0;
    r.u8();
    rec.spec.filters = static_cast<int>(r.u32le());
    rec.spec.size = static_cast<int>(r.u32le());
    rec.spec.stride = static_cast<int>(r.u32le());
    rec.spec.pad = static_cast<int>(r.u32le());
    rec.spec.groups = static_cast<int>(r.u32le());
    rec.spec.outputs = static_cast<int>(r.u32le());
    rec.spec.from = r.i32le();
    if (r.remaining() != 0) throw FormatError("layer record: trailing bytes");
    return rec;
}

inline std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
    std::vector<std::uint8_t> out;
    out.reserve(12 + t.size() * 4);
    put_u32le(out, static_cast<std::uint32_t>(t.c));
    put_u32le(out, static_cast<std::uint32_t>(t.h));
    put_u32le(out, static_cast<std::uint32_t>(t.w));
    for (float f : t.data) put_f32le(out, f);
    return out;
}

inline Tensor decode_tensor(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    int c = static_cast<int>(r.u32le());
    int h = static_cast<int>(r.u32le());
    int w = static_cast<int>(r.u32le());
    if (c <= 0 || h <= 0 || w <= 0) throw FormatError("tensor payload: bad dims");
    std::size_t n = static_cast<std::size_t>(c) * h * w;
    if (r.remaining() != n * 4) throw FormatError("tensor payload: length mismatch");
    Tensor t(c, h, w);
    for (std::size_t i = 0; i < n; ++i) t.data[i] = r.f32le();
    return t;
}

inline std::vector<std::uint8_t> encode_status(std::uint32_t v) {
    std::vector<std::uint8_t> out;
    put_u32le(out, v);
    return out;
}

} // namespace tinyzone
