#include "tinyzone/convert.hpp"

#include <fstream>

#include "json.hpp"

#include "tinyzone/bytes.hpp"

namespace tinyzone {

namespace {

const char* generic_kind_name(GenericKind k) {
    switch (k) {
        case GenericKind::conv2d: return "conv2d";
        case GenericKind::batchnorm2d: return "batchnorm2d";
        case GenericKind::linear: return "linear";
        case GenericKind::maxpool2d: return "maxpool2d";
        case GenericKind::avgpool2d: return "avgpool2d";
        case GenericKind::relu: return "relu";
        case GenericKind::softmax: return "softmax";
    }
    return "?";
}

std::vector<std::uint8_t> pack_floats(const std::vector<float>& v) {
    return floats_to_le(std::span<const float>(v.data(), v.size()));
}

} // namespace

CaffeIR lower_to_caffe(const GenericModel& model) {
    CaffeIR ir;
    ir.c = model.c;
    ir.h = model.h;
    ir.w = model.w;
    for (const GenericOp& op : model.ops) {
        switch (op.kind) {
            case GenericKind::conv2d: {
                CaffeOp conv;
                conv.kind = CaffeKind::convolution;
                conv.out_channels = op.out_channels;
                conv.kernel = op.kernel;
                conv.stride = op.stride;
                conv.pad = op.pad;
                conv.groups = op.groups;
                conv.has_bias = op.has_bias;
                conv.weight = op.weight;
                conv.bias = op.bias;
                ir.ops.push_back(std::move(conv));
                break;
            }
            case GenericKind::batchnorm2d: {
                // Split form: statistics first, then the affine scale.
                CaffeOp bn;
                bn.kind = CaffeKind::batchnorm;
                bn.mean = op.running_mean;
                bn.variance = op.running_var;
                ir.ops.push_back(std::move(bn));
                CaffeOp sc;
                sc.kind = CaffeKind::scale;
                sc.gamma = op.gamma;
                sc.beta = op.beta;
                ir.ops.push_back(std::move(sc));
                break;
            }
            case GenericKind::linear: {
                CaffeOp ip;
                ip.kind = CaffeKind::innerproduct;
                ip.out_features = op.out_features;
                ip.has_bias = op.has_bias;
                ip.weight = op.weight;
                ip.bias = op.bias;
                ir.ops.push_back(std::move(ip));
                break;
            }
            case GenericKind::maxpool2d: {
                CaffeOp pool;
                pool.kind = CaffeKind::pooling_max;
                pool.kernel = op.kernel;
                pool.stride = op.stride;
                pool.pad = op.pad;
                ir.ops.push_back(std::move(pool));
                break;
            }
            case GenericKind::avgpool2d: {
                CaffeOp pool;
                pool.kind = CaffeKind::pooling_avg;
                ir.ops.push_back(std::move(pool));
                break;
            }
            case GenericKind::relu: {
                CaffeOp relu;
                relu.kind = CaffeKind::relu;
                ir.ops.push_back(std::move(relu));
                break;
            }
            case GenericKind::softmax: {
                CaffeOp sm;
                sm.kind = CaffeKind::softmax;
                ir.ops.push_back(std::move(sm));
                break;
            }
            default:
                throw ConversionError(std::string("unsupported op '") + generic_kind_name(op.kind) + "'");
        }
    }
    return ir;
}

FoldResult fold_to_tinylib(const CaffeIR& ir) {
    FoldResult out;
    out.spec.c = ir.c;
    out.spec.h = ir.h;
    out.spec.w = ir.w;

    std::size_t i = 0;
    while (i < ir.ops.size()) {
        const CaffeOp& op = ir.ops[i];
        switch (op.kind) {
            case CaffeKind::convolution: {
                bool has_bn = i + 1 < ir.ops.size() && ir.ops[i + 1].kind == CaffeKind::batchnorm;
                const CaffeOp* bn = nullptr;
                const CaffeOp* sc = nullptr;
                std::size_t consumed = 1;
                if (has_bn) {
                    bn = &ir.ops[i + 1];
                    if (i + 2 >= ir.ops.size() || ir.ops[i + 2].kind != CaffeKind::scale)
                        throw ConversionError("batchnorm not followed by scale");
                    sc = &ir.ops[i + 2];
                    consumed = 3;
                }
                bool has_relu =
                    i + consumed < ir.ops.size() && ir.ops[i + consumed].kind == CaffeKind::relu;
                if (has_relu) ++consumed;

                LayerSpec layer;
                layer.kind = LayerKind::convolutional;
                layer.filters = op.out_channels;
                layer.size = op.kernel;
                layer.stride = op.stride;
                layer.pad = op.pad;
                layer.groups = op.groups;
                layer.batch_normalize = has_bn;
                layer.activation = has_relu ? Activation::relu : Activation::linear;
                out.spec.layers.push_back(layer);

                std::vector<float> conv_bias = op.bias;
                conv_bias.resize(static_cast<std::size_t>(op.out_channels), 0.0f);

                std::vector<std::uint8_t> payload;
                if (has_bn) {
                    if (static_cast<int>(bn->mean.size()) != op.out_channels ||
                        static_cast<int>(sc->gamma.size()) != op.out_channels)
                        throw ConversionError("batchnorm/scale channel count mismatch");
                    // Fused mean absorbs the conv bias so both paths agree.
                    std::vector<float> mean(bn->mean);
                    for (std::size_t f = 0; f < mean.size(); ++f) mean[f] -= conv_bias[f];
                    auto append = [&](const std::vector<float>& v) {
                        auto b = pack_floats(v);
                        payload.insert(payload.end(), b.begin(), b.end());
                    };
                    append(sc->beta);       // biases
                    append(sc->gamma);      // scales
                    append(mean);           // rolling_mean
                    append(bn->variance);   // rolling_variance
                    append(op.weight);      // weights
                } else {
                    auto b = pack_floats(conv_bias);
                    payload.insert(payload.end(), b.begin(), b.end());
                    auto wbytes = pack_floats(op.weight);
                    payload.insert(payload.end(), wbytes.begin(), wbytes.end());
                }
                out.weights.layer_payloads.push_back(std::move(payload));
                i += consumed;
                break;
            }
            case CaffeKind::batchnorm:
                throw ConversionError("batchnorm without a preceding convolution");
            case CaffeKind::scale:
                throw ConversionError("scale without a preceding batchnorm");
            case CaffeKind::pooling_max: {
                LayerSpec layer;
                layer.kind = LayerKind::maxpool;
                layer.size = op.kernel;
                layer.stride = op.stride;
                layer.pad = op.pad;
                out.spec.layers.push_back(layer);
                ++i;
                break;
            }
            case CaffeKind::pooling_avg: {
                LayerSpec layer;
                layer.kind = LayerKind::avgpool;
                out.spec.layers.push_back(layer);
                ++i;
                break;
            }
            case CaffeKind::innerproduct: {
                bool has_relu = i + 1 < ir.ops.size() && ir.ops[i + 1].kind == CaffeKind::relu;
                LayerSpec layer;
                layer.kind = LayerKind::connected;
                layer.outputs = op.out_features;
                layer.activation = has_relu ? Activation::relu : Activation::linear;
                out.spec.layers.push_back(layer);

                std::vector<float> bias = op.bias;
                bias.resize(static_cast<std::size_t>(op.out_features), 0.0f);
                std::vector<std::uint8_t> payload = pack_floats(bias);
                auto wbytes = pack_floats(op.weight);
                payload.insert(payload.end(), wbytes.begin(), wbytes.end());
                out.weights.layer_payloads.push_back(std::move(payload));
                i += has_relu ? 2 : 1;
                break;
            }
            case CaffeKind::relu:
                throw ConversionError("relu must follow a convolution or innerproduct");
            case CaffeKind::softmax: {
                LayerSpec layer;
                layer.kind = LayerKind::softmax;
                out.spec.layers.push_back(layer);
                ++i;
                break;
            }
        }
    }

    validate_weights(out.spec, out.weights);  // also checks shape consistency
    return out;
}

std::map<std::string, std::vector<float>> read_tensor_store(const std::string& path) {
    auto bytes = read_file(path);
    ByteReader r(bytes);
    auto magic = r.bytes(4);
    if (magic[0] != 'T' || magic[1] != 'Z' || magic[2] != 'T' || magic[3] != 'B')
        throw FormatError("tensor store: bad magic");
    std::uint32_t count = r.u32le();
    struct Entry {
        std::string name;
        std::uint64_t offset;
        std::uint64_t floats;
    };
    std::vector<Entry> toc;
    toc.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len = r.u32le();
        auto name_bytes = r.bytes(name_len);
        Entry e;
        e.name.assign(name_bytes.begin(), name_bytes.end());
        e.offset = r.u64le();
        e.floats = r.u64le();
        toc.push_back(std::move(e));
    }
    std::size_t data_start = r.position();
    std::map<std::string, std::vector<float>> tensors;
    for (const Entry& e : toc) {
        std::size_t begin = data_start + e.offset;
        std::size_t len = e.floats * 4;
        if (begin + len > bytes.size()) throw FormatError("tensor store: TOC entry out of range");
        tensors[e.name] = floats_from_le(std::span<const std::uint8_t>(bytes.data() + begin, len));
    }
    return tensors;
}

void write_tensor_store(const std::string& path,
                        const std::map<std::string, std::vector<float>>& tensors) {
    std::vector<std::uint8_t> out = {'T', 'Z', 'T', 'B'};
    put_u32le(out, static_cast<std::uint32_t>(tensors.size()));
    std::uint64_t offset = 0;
    for (const auto& [name, data] : tensors) {
        put_u32le(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u64le(out, offset);
        put_u64le(out, data.size());
        offset += data.size() * 4;
    }
    for (const auto& [name, data] : tensors) {
        auto b = floats_to_le(std::span<const float>(data.data(), data.size()));
        out.insert(out.end(), b.begin(), b.end());
    }
    write_file(path, out);
}

GenericModel load_generic_model(const std::string& manifest_path) {
    auto bytes = read_file(manifest_path);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }

    GenericModel model;
    try {
        model.c = manifest.at("input").at("c").get<int>();
        model.h = manifest.at("input").at("h").get<int>();
        model.w = manifest.at("input").at("w").get<int>();

        std::map<std::string, std::vector<float>> store;
        if (manifest.contains("tensor_store")) {
            std::string store_path = manifest.at("tensor_store").get<std::string>();
            // Relative to the manifest location.
            auto slash = manifest_path.find_last_of('/');
            if (slash != std::string::npos && !store_path.empty() && store_path.front() != '/')
                store_path = manifest_path.substr(0, slash + 1) + store_path;
            store = read_tensor_store(store_path);
        }
        auto tensor = [&](const nlohmann::json& op, const char* slot) -> std::vector<float> {
            if (!op.contains("tensors") || !op.at("tensors").contains(slot)) return {};
            std::string ref = op.at("tensors").at(slot).get<std::string>();
            auto it = store.find(ref);
            if (it == store.end()) throw FormatError("manifest: unresolved tensor '" + ref + "'");
            return it->second;
        };

        for (const auto& op_json : manifest.at("ops")) {
            std::string kind = op_json.at("kind").get<std::string>();
            GenericOp op;
            auto attr = [&](const char* name, int fallback) {
                if (!op_json.contains("attrs") || !op_json.at("attrs").contains(name)) return fallback;
                return op_json.at("attrs").at(name).get<int>();
            };
            if (kind == "conv2d") {
                op.kind = GenericKind::conv2d;
                op.out_channels = attr("out_channels", 0);
                op.kernel = attr("kernel", 0);
                op.stride = attr("stride", 1);
                op.pad = attr("pad", 0);
                op.groups = attr("groups", 1);
                op.weight = tensor(op_json, "weight");
                op.bias = tensor(op_json, "bias");
                op.has_bias = !op.bias.empty();
            } else if (kind == "batchnorm2d") {
                op.kind = GenericKind::batchnorm2d;
                op.gamma = tensor(op_json, "gamma");
                op.beta = tensor(op_json, "beta");
                op.running_mean = tensor(op_json, "running_mean");
                op.running_var = tensor(op_json, "running_var");
            } else if (kind == "linear") {
                op.kind = GenericKind::linear;
                op.out_features = attr("out_features", 0);
                op.weight = tensor(op_json, "weight");
                op.bias = tensor(op_json, "bias");
                op.has_bias = !op.bias.empty();
            } else if (kind == "maxpool2d") {
                op.kind = GenericKind::maxpool2d;
                op.kernel = attr("kernel", 0);
                op.stride = attr("stride", 1);
                op.pad = attr("pad", 0);
            } else if (kind == "avgpool2d") {
                op.kind = GenericKind::avgpool2d;
            } else if (kind == "relu") {
                op.kind = GenericKind::relu;
            } else if (kind == "softmax") {
                op.kind = GenericKind::softmax;
            } else {
                throw ConversionError("unsupported op '" + kind + "'");
            }
            model.ops.push_back(std::move(op));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
    return model;
}

} // namespace tinyzone
