#include "tinyzone/secure_world.hpp"

#include <algorithm>

#include "tinyzone/crypto.hpp"

namespace tinyzone {

std::vector<std::uint8_t> SecureWorld::handle(TaCommand cmd, std::span<const std::uint8_t> payload) {
    switch (cmd) {
        case TaCommand::build_layer: return on_build_layer(payload);
        case TaCommand::weight_chunk: return on_weight_chunk(payload);
        case TaCommand::send_input: return on_send_input(payload);
        case TaCommand::infer: return on_infer();
        case TaCommand::fetch_result: return on_fetch_result();
    }
    throw ProtocolError("unknown TA command");
}

std::vector<std::uint8_t> SecureWorld::on_build_layer(std::span<const std::uint8_t> payload) {
    if (!building_) throw ProtocolError("build_layer after weight streaming started");
    LayerRecord rec = decode_layer_record(payload);

    if (!network_) {
        if (rec.layer_index != 0) throw ProtocolError("first build_layer must carry index 0");
        network_ = make_network(static_cast<int>(rec.in_c), static_cast<int>(rec.in_h),
                                static_cast<int>(rec.in_w));
    } else {
        if (rec.layer_index != network_->layers.size())
            throw ProtocolError("build_layer index out of order");
        const Layer& prev = network_->layers.back();
        if (static_cast<int>(rec.in_c) != prev.dims.out_c ||
            static_cast<int>(rec.in_h) != prev.dims.out_h ||
            static_cast<int>(rec.in_w) != prev.dims.out_w)
            throw ShapeError("build_layer: declared input dims do not match the chain");
    }
    append_layer(*network_, rec.spec, legacy_init_);
    return encode_status(rec.layer_index);
}

std::uint64_t SecureWorld::expected_stream_bytes() const {
    // TZWE framing (magic + nonce + checksum) around a TZWT container whose
    // size follows from the built network: header + one length-prefixed
    // payload per weighted layer.
    std::uint64_t tzwt = 12;
    for (std::size_t i = 0; i < network_->layers.size(); ++i)
        if (is_weighted(network_->layers[i].spec.kind))
            tzwt += 4 + expected_weight_bytes(*network_, i);
    return 20 + tzwt;
}

std::vector<std::uint8_t> SecureWorld::on_weight_chunk(std::span<const std::uint8_t> payload) {
    if (!network_) throw ProtocolError("weight_chunk before any build_layer");
    if (stream_done_) throw ProtocolError("weight_chunk after weights completed");
    if (payload.empty()) throw ProtocolError("empty weight chunk");
    building_ = false;

    std::uint64_t expected = expected_stream_bytes();
    if (weight_stream_.size() + payload.size() > expected)
        throw ProtocolError("weight stream longer than expected");
    weight_stream_.insert(weight_stream_.end(), payload.begin(), payload.end());
    if (weight_stream_.size() == expected) {
        finalize_weights();
        stream_done_ = true;
    }
    return encode_status(stream_done_ ? 1 : 0);
}

void SecureWorld::finalize_weights() {
    EncryptedBlob blob = blob_from_bytes(weight_stream_);
    std::vector<std::uint8_t> plain = decrypt_blob(blob, key_);  // IntegrityError on tamper

    ByteReader r(plain);
    auto magic = r.bytes(4);
    if (magic[0] != 'T' || magic[1] != 'Z' || magic[2] != 'W' || magic[3] != 'T')
        throw FormatError("weight container: bad magic");
    std::uint32_t version = r.u32le();
    if (version != 1) throw FormatError("weight container: unsupported version");
    std::uint32_t count = r.u32le();

    std::uint32_t filled = 0;
    for (std::size_t i = 0; i < network_->layers.size(); ++i) {
        if (!is_weighted(network_->layers[i].spec.kind)) continue;
        if (filled == count) throw FormatError("weight container: fewer layers than the model");
        std::uint32_t len = r.u32le();
        load_layer_weights(*network_, i, r.bytes(len));
        ++filled;
    }
    if (filled != count) throw FormatError("weight container: layer count mismatch");
    if (r.remaining() != 0) throw FormatError("weight container: trailing bytes");

    // Plaintext stays secure-side; wipe the staging copies.
    std::fill(plain.begin(), plain.end(), std::uint8_t{0});
    std::fill(weight_stream_.begin(), weight_stream_.end(), std::uint8_t{0});
    weight_stream_.clear();
}

std::vector<std::uint8_t> SecureWorld::on_send_input(std::span<const std::uint8_t> payload) {
    if (!network_ || !stream_done_) throw ProtocolError("send_input before weights complete");
    Tensor t = decode_tensor(payload);
    if (t.c != network_->in_c || t.h != network_->in_h || t.w != network_->in_w)
        throw ShapeError("send_input: dims do not match the network input");
    input_ = std::move(t);
    output_.reset();
    return encode_status(0);
}

std::vector<std::uint8_t> SecureWorld::on_infer() {
    if (!network_ || !stream_done_) throw ProtocolError("infer before weights complete");
    if (!input_) throw ProtocolError("infer before send_input");
    output_ = forward(*network_, *input_);
    return encode_status(static_cast<std::uint32_t>(output_->size()));
}

std::vector<std::uint8_t> SecureWorld::on_fetch_result() {
    if (!output_) throw ProtocolError("fetch_result before infer");
    std::vector<std::uint8_t> plain = encode_tensor(*output_);
    std::uint64_t nonce = fnv1a64(plain);  // deterministic, content derived
    EncryptedBlob blob = encrypt_bytes(plain, key_, nonce);
    return blob_to_bytes(blob);
}

void SecureWorld::destroy() {
    if (network_) {
        for (Layer& l : network_->layers) {
            std::fill(l.weights.begin(), l.weights.end(), 0.0f);
            std::fill(l.biases.begin(), l.biases.end(), 0.0f);
            std::fill(l.scales.begin(), l.scales.end(), 0.0f);
            std::fill(l.rolling_mean.begin(), l.rolling_mean.end(), 0.0f);
            std::fill(l.rolling_variance.begin(), l.rolling_variance.end(), 0.0f);
            std::fill(l.output.begin(), l.output.end(), 0.0f);
        }
    }
    network_.reset();
    std::fill(weight_stream_.begin(), weight_stream_.end(), std::uint8_t{0});
    weight_stream_.clear();
    stream_done_ = false;
    building_ = true;
    input_.reset();
    output_.reset();
}

} // namespace tinyzone
