#include "tinyzone/client.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "tinyzone/bytes.hpp"
#include "tinyzone/wire.hpp"

namespace tinyzone {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Section {
    std::string name;
    int line = 0;
    std::vector<std::tuple<std::string, std::string, int>> pairs;  // key, value, line
};

std::vector<Section> split_sections(const std::string& text) {
    std::vector<Section> sections;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw ParseError(line_no, "malformed section header '" + line + "'");
            sections.push_back({line.substr(1, line.size() - 2), line_no, {}});
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(line_no, "expected key=value, got '" + line + "'");
        if (sections.empty()) throw ParseError(line_no, "key=value before any section");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(line_no, "empty key");
        sections.back().pairs.emplace_back(key, value, line_no);
    }
    return sections;
}

int parse_int(const std::string& value, int line) {
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(value, &pos);
    } catch (const std::exception&) {
        throw ParseError(line, "malformed number '" + value + "'");
    }
    if (pos != value.size()) throw ParseError(line, "malformed number '" + value + "'");
    return v;
}

Activation parse_activation(const std::string& value, int line) {
    if (value == "linear") return Activation::linear;
    if (value == "relu") return Activation::relu;
    if (value == "leaky") return Activation::leaky;
    throw ParseError(line, "unknown activation '" + value + "'");
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::linear: return "linear";
        case Activation::relu: return "relu";
        case Activation::leaky: return "leaky";
    }
    return "?";
}

struct KeyTable {
    std::map<std::string, std::pair<int, int>> values;  // key -> (value, line)

    int get(const std::string& key, int fallback) const {
        auto it = values.find(key);
        return it == values.end() ? fallback : it->second.first;
    }
    int require(const std::string& key, const std::string& section, int section_line) const {
        auto it = values.find(key);
        if (it == values.end())
            throw ParseError(section_line, "[" + section + "] missing required key '" + key + "'");
        return it->second.first;
    }
    bool has(const std::string& key) const { return values.count(key) != 0; }
};

} // namespace

NetworkSpec parse_cfg(const std::string& text) {
    auto sections = split_sections(text);
    if (sections.empty() || sections.front().name != "net")
        throw ParseError(sections.empty() ? 1 : sections.front().line,
                         "config must start with a [net] section");

    static const std::map<std::string, std::vector<std::string>> recognized = {
        {"net", {"channels", "height", "width"}},
        {"convolutional",
         {"filters", "size", "stride", "pad", "groups", "batch_normalize", "activation"}},
        {"maxpool", {"size", "stride", "pad"}},
        {"avgpool", {}},
        {"connected", {"output", "activation"}},
        {"softmax", {}},
        {"shortcut", {"from", "activation"}},
    };

    NetworkSpec spec;
    int layer_index = 0;
    for (std::size_t si = 0; si < sections.size(); ++si) {
        const Section& sec = sections[si];
        auto rec = recognized.find(sec.name);
        if (rec == recognized.end())
            throw ParseError(sec.line, "unknown section [" + sec.name + "]");
        if (si > 0 && sec.name == "net") throw ParseError(sec.line, "[net] must appear once, first");

        KeyTable table;
        Activation activation = Activation::linear;
        for (const auto& [key, value, line] : sec.pairs) {
            if (std::find(rec->second.begin(), rec->second.end(), key) == rec->second.end())
                throw ParseError(line, "unknown key '" + key + "' in [" + sec.name + "]");
            if (key == "activation")
                activation = parse_activation(value, line);
            else
                table.values[key] = {parse_int(value, line), line};
        }

        if (sec.name == "net") {
            spec.c = table.require("channels", sec.name, sec.line);
            spec.h = table.require("height", sec.name, sec.line);
            spec.w = table.require("width", sec.name, sec.line);
            if (spec.c <= 0 || spec.h <= 0 || spec.w <= 0)
                throw ParseError(sec.line, "[net] dims must be positive");
            continue;
        }

        LayerSpec layer;
        layer.activation = activation;
        if (sec.name == "convolutional") {
            layer.kind = LayerKind::convolutional;
            layer.filters = table.require("filters", sec.name, sec.line);
            layer.size = table.require("size", sec.name, sec.line);
            layer.stride = table.get("stride", 1);
            layer.pad = table.get("pad", 0);
            layer.groups = table.get("groups", 1);
            layer.batch_normalize = table.get("batch_normalize", 0) != 0;
        } else if (sec.name == "maxpool") {
            layer.kind = LayerKind::maxpool;
            layer.size = table.require("size", sec.name, sec.line);
            layer.stride = table.get("stride", 1);
            layer.pad = table.get("pad", 0);
        } else if (sec.name == "avgpool") {
            layer.kind = LayerKind::avgpool;
        } else if (sec.name == "connected") {
            layer.kind = LayerKind::connected;
            layer.outputs = table.require("output", sec.name, sec.line);
        } else if (sec.name == "softmax") {
            layer.kind = LayerKind::softmax;
        } else if (sec.name == "shortcut") {
            layer.kind = LayerKind::shortcut;
            int from = table.require("from", sec.name, sec.line);
            layer.from = from < 0 ? layer_index + from : from;  // negative means relative
            if (layer.from < 0 || layer.from >= layer_index)
                throw ParseError(sec.line, "[shortcut] from-index out of range");
        }
        spec.layers.push_back(layer);
        ++layer_index;
    }
    return spec;
}

std::string serialize_cfg(const NetworkSpec& spec) {
    std::ostringstream out;
    out << "[net]\n"
        << "channels=" << spec.c << "\nheight=" << spec.h << "\nwidth=" << spec.w << "\n";
    for (const LayerSpec& l : spec.layers) {
        out << "\n";
        switch (l.kind) {
            case LayerKind::convolutional:
                out << "[convolutional]\nfilters=" << l.filters << "\nsize=" << l.size
                    << "\nstride=" << l.stride << "\npad=" << l.pad << "\ngroups=" << l.groups
                    << "\nbatch_normalize=" << (l.batch_normalize ? 1 : 0) << "\nactivation="
                    << activation_name(l.activation) << "\n";
                break;
            case LayerKind::maxpool:
                out << "[maxpool]\nsize=" << l.size << "\nstride=" << l.stride << "\npad=" << l.pad
                    << "\n";
                break;
            case LayerKind::avgpool:
                out << "[avgpool]\n";
                break;
            case LayerKind::connected:
                out << "[connected]\noutput=" << l.outputs << "\nactivation="
                    << activation_name(l.activation) << "\n";
                break;
            case LayerKind::softmax:
                out << "[softmax]\n";
                break;
            case LayerKind::shortcut:
                out << "[shortcut]\nfrom=" << l.from << "\nactivation="
                    << activation_name(l.activation) << "\n";
                break;
        }
    }
    return out.str();
}

NetworkSpec load_cfg_file(const std::string& path) {
    auto bytes = read_file(path);
    return parse_cfg(std::string(bytes.begin(), bytes.end()));
}

std::vector<std::uint8_t> weight_file_to_bytes(const WeightFile& wf) {
    std::vector<std::uint8_t> out = {'T', 'Z', 'W', 'T'};
    put_u32le(out, 1);  // version
    put_u32le(out, static_cast<std::uint32_t>(wf.layer_payloads.size()));
    for (const auto& payload : wf.layer_payloads) {
        put_u32le(out, static_cast<std::uint32_t>(payload.size()));
        out.insert(out.end(), payload.begin(), payload.end());
    }
    return out;
}

WeightFile weight_file_from_bytes(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    auto magic = r.bytes(4);
    if (magic[0] != 'T' || magic[1] != 'Z' || magic[2] != 'W' || magic[3] != 'T')
        throw FormatError("weight file: bad magic");
    std::uint32_t version = r.u32le();
    if (version != 1) throw FormatError("weight file: unsupported version");
    std::uint32_t count = r.u32le();
    WeightFile wf;
    wf.layer_payloads.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t len = r.u32le();
        auto payload = r.bytes(len);
        wf.layer_payloads.emplace_back(payload.begin(), payload.end());
    }
    if (r.remaining() != 0) throw FormatError("weight file: trailing bytes");
    return wf;
}

void validate_weights(const NetworkSpec& spec, const WeightFile& wf) {
    auto dims = resolve_shapes(spec);
    std::size_t wi = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (!is_weighted(spec.layers[i].kind)) continue;
        if (wi >= wf.layer_payloads.size())
            throw FormatError("weight file: missing payload for layer " + std::to_string(i));
        std::uint64_t expected =
            4 * layer_param_count(spec.layers[i], dims[i].in_c, dims[i].in_h, dims[i].in_w);
        if (wf.layer_payloads[wi].size() != expected)
            throw FormatError("weight file: layer " + std::to_string(i) + " expects " +
                              std::to_string(expected) + " bytes, got " +
                              std::to_string(wf.layer_payloads[wi].size()));
        ++wi;
    }
    if (wi != wf.layer_payloads.size())
        throw FormatError("weight file: more payloads than weighted layers");
}

namespace {

// PPM header tokens may be separated by whitespace and '#' comments.
std::string next_ppm_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        char ch = static_cast<char>(bytes[pos]);
        if (ch == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(ch))) {
            ++pos;
        } else {
            break;
        }
    }
    std::string token;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
           bytes[pos] != '#')
        token.push_back(static_cast<char>(bytes[pos++]));
    if (token.empty()) throw FormatError("ppm: truncated header");
    return token;
}

int ppm_int(const std::string& token) {
    for (char ch : token)
        if (!std::isdigit(static_cast<unsigned char>(ch))) throw FormatError("ppm: bad header number");
    return std::stoi(token);
}

} // namespace

Image read_ppm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    std::string magic = next_ppm_token(bytes, pos);
    if (magic != "P6") throw FormatError("ppm: expected binary P6, got '" + magic + "'");
    Image img;
    img.w = ppm_int(next_ppm_token(bytes, pos));
    img.h = ppm_int(next_ppm_token(bytes, pos));
    int maxval = ppm_int(next_ppm_token(bytes, pos));
    if (img.w <= 0 || img.h <= 0) throw FormatError("ppm: bad dimensions");
    if (maxval != 255) throw FormatError("ppm: only maxval 255 supported");
    ++pos;  // single whitespace after maxval
    std::size_t need = static_cast<std::size_t>(img.w) * img.h * 3;
    if (pos + need > bytes.size()) throw FormatError("ppm: truncated pixel data");
    img.rgb.assign(bytes.begin() + pos, bytes.begin() + pos + need);
    return img;
}

Image read_ppm_file(const std::string& path) { return read_ppm(read_file(path)); }

std::vector<std::uint8_t> write_ppm(const Image& img) {
    std::string header = "P6\n" + std::to_string(img.w) + " " + std::to_string(img.h) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.rgb.begin(), img.rgb.end());
    return out;
}

Tensor image_to_tensor(const Image& img) {
    Tensor t(3, img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                t.at(ch, y, x) = static_cast<float>(img.rgb[(static_cast<std::size_t>(y) * img.w + x) * 3 + ch]) / 255.0f;
    return t;
}

Tensor bilinear_resize(const Tensor& src, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw ShapeError("bilinear_resize: bad target dims");
    Tensor dst(src.c, out_h, out_w);
    double scale_y = out_h > 1 ? static_cast<double>(src.h - 1) / (out_h - 1) : 0.0;
    double scale_x = out_w > 1 ? static_cast<double>(src.w - 1) / (out_w - 1) : 0.0;
    for (int ch = 0; ch < src.c; ++ch) {
        for (int y = 0; y < out_h; ++y) {
            double sy = y * scale_y;
            int y0 = static_cast<int>(sy);
            int y1 = std::min(y0 + 1, src.h - 1);
            double fy = sy - y0;
            for (int x = 0; x < out_w; ++x) {
                double sx = x * scale_x;
                int x0 = static_cast<int>(sx);
                int x1 = std::min(x0 + 1, src.w - 1);
                double fx = sx - x0;
                double top = (1.0 - fx) * src.at(ch, y0, x0) + fx * src.at(ch, y0, x1);
                double bottom = (1.0 - fx) * src.at(ch, y1, x0) + fx * src.at(ch, y1, x1);
                dst.at(ch, y, x) = static_cast<float>((1.0 - fy) * top + fy * bottom);
            }
        }
    }
    return dst;
}

Tensor load_image(const std::string& path, int c, int h, int w) {
    if (c != 3) throw ShapeError("load_image: network input must have 3 channels for RGB images");
    Image img = read_ppm_file(path);
    return bilinear_resize(image_to_tensor(img), h, w);
}

EncryptedBlob encrypt_weights(std::span<const std::uint8_t> weight_file_bytes, std::uint64_t key,
                              std::uint64_t nonce) {
    return encrypt_bytes(weight_file_bytes, key, nonce);
}

void build_remote_network(Session& session, const NetworkSpec& spec) {
    auto dims = resolve_shapes(spec);  // client-side validation before any invoke
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        LayerRecord rec;
        rec.layer_index = static_cast<std::uint32_t>(i);
        rec.in_c = static_cast<std::uint32_t>(dims[i].in_c);
        rec.in_h = static_cast<std::uint32_t>(dims[i].in_h);
        rec.in_w = static_cast<std::uint32_t>(dims[i].in_w);
        rec.spec = spec.layers[i];
        session.invoke(TaCommand::build_layer, encode_layer_record(rec));
    }
}

std::size_t stream_weights(Session& session, const NetworkSpec& spec, const EncryptedBlob& blob,
                           std::size_t chunk_bytes) {
    // Early client-side sanity check: the ciphertext must be exactly the
    // weight container the model expects, or the TA will reject the stream.
    auto dims = resolve_shapes(spec);
    std::uint64_t expected_tzwt = 12;
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        if (is_weighted(spec.layers[i].kind))
            expected_tzwt +=
                4 + 4 * layer_param_count(spec.layers[i], dims[i].in_c, dims[i].in_h, dims[i].in_w);
    if (blob.ciphertext.size() != expected_tzwt)
        throw FormatError("stream_weights: encrypted payload does not match the model");

    if (chunk_bytes == 0) chunk_bytes = session.plan().shm_size;
    if (chunk_bytes == 0) throw DomainError("stream_weights: zero chunk size");
    if (chunk_bytes > session.plan().shm_size)
        throw CapacityError("stream_weights: chunk exceeds shared memory");

    std::vector<std::uint8_t> image = blob_to_bytes(blob);
    std::size_t sent = 0;
    std::size_t chunks = 0;
    std::uint32_t complete = 0;
    while (sent < image.size()) {
        std::size_t n = std::min(chunk_bytes, image.size() - sent);
        auto resp = session.invoke(TaCommand::weight_chunk,
                                   std::span<const std::uint8_t>(image.data() + sent, n));
        complete = ByteReader(resp).u32le();
        sent += n;
        ++chunks;
    }
    if (complete != 1) throw ProtocolError("stream_weights: stream ended but weights incomplete");
    return chunks;
}

void send_input(Session& session, const Tensor& input) {
    session.invoke(TaCommand::send_input, encode_tensor(input));
}

void run_infer(Session& session) { session.invoke(TaCommand::infer, {}); }

Tensor fetch_result(Session& session, std::uint64_t key) {
    auto resp = session.invoke(TaCommand::fetch_result, {});
    EncryptedBlob blob = blob_from_bytes(resp);
    return decode_tensor(decrypt_blob(blob, key));
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

} // namespace tinyzone
