#include "doctest.h"

#include <cmath>
#include <random>

#include "driver_util.hpp"
#include "test_util.hpp"
#include "tinyzone/client.hpp"
#include "tinyzone/genmodel.hpp"

using namespace tinyzone;

namespace {

// One connected layer over a c x 1 x 1 input: tunable container size.
// params = c + 1, encrypted image = 36 + 4 * (c + 1) bytes.
GeneratedModel sized_model(int c) {
    GeneratedModel gen;
    gen.spec.c = c;
    gen.spec.h = 1;
    gen.spec.w = 1;
    LayerSpec fc;
    fc.kind = LayerKind::connected;
    fc.outputs = 1;
    gen.spec.layers.push_back(fc);
    gen.weights.layer_payloads.push_back(
        random_layer_payload(fc, c, 1, 1, 42));
    return gen;
}

Session session_with_shm(std::uint64_t shm_bytes, std::uint64_t key) {
    return open_session(testutil::make_plan(shm_bytes), InvokeCostModel{},
                        SessionOptions{false, key, false});
}

} // namespace

TEST_CASE("parse_cfg minimal config") {
    NetworkSpec spec = parse_cfg("[net]\nchannels=3\nheight=4\nwidth=4\n\n[softmax]\n");
    CHECK(spec.c == 3);
    CHECK(spec.h == 4);
    CHECK(spec.w == 4);
    REQUIRE(spec.layers.size() == 1);
    CHECK(spec.layers[0].kind == LayerKind::softmax);
}

TEST_CASE("parse_cfg error reporting") {
    SUBCASE("missing required key names it") {
        try {
            parse_cfg("[net]\nchannels=3\nheight=4\nwidth=4\n[convolutional]\nsize=3\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("filters") != std::string::npos);
        }
    }
    SUBCASE("unknown section") {
        CHECK_THROWS_AS(parse_cfg("[net]\nchannels=1\nheight=1\nwidth=1\n[lstm]\n"), ParseError);
    }
    SUBCASE("unknown key carries the line number") {
        try {
            parse_cfg("[net]\nchannels=1\nheight=1\nwidth=1\nbogus=2\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line == 5);
        }
    }
    SUBCASE("missing net section") {
        CHECK_THROWS_AS(parse_cfg("[softmax]\n"), ParseError);
    }
    SUBCASE("malformed number") {
        CHECK_THROWS_AS(parse_cfg("[net]\nchannels=three\nheight=1\nwidth=1\n[softmax]\n"),
                        ParseError);
    }
    SUBCASE("stray text") {
        CHECK_THROWS_AS(parse_cfg("[net]\nchannels=1\nheight=1\nwidth=1\nnonsense\n"), ParseError);
    }
}

TEST_CASE("parse_cfg applies defaults and relative shortcuts") {
    NetworkSpec spec = parse_cfg(
        "[net]\nchannels=2\nheight=8\nwidth=8\n"
        "[convolutional]\nfilters=2\nsize=3\npad=1\n"
        "[convolutional]\nfilters=2\nsize=3\npad=1\n"
        "[shortcut]\nfrom=-2\nactivation=relu\n");
    REQUIRE(spec.layers.size() == 3);
    CHECK(spec.layers[0].stride == 1);
    CHECK(spec.layers[0].groups == 1);
    CHECK(spec.layers[0].batch_normalize == false);
    CHECK(spec.layers[0].activation == Activation::linear);
    CHECK(spec.layers[2].kind == LayerKind::shortcut);
    CHECK(spec.layers[2].from == 0);  // -2 resolved against index 2
}

TEST_CASE("cfg round-trips through the canonical serializer") {
    auto fixture = read_file(std::string(FIXTURE_DIR) + "/sample5.cfg");
    std::string text(fixture.begin(), fixture.end());

    NetworkSpec parsed = parse_cfg(text);
    REQUIRE(parsed.layers.size() == 5);
    std::string canonical = serialize_cfg(parsed);
    CHECK(parse_cfg(canonical) == parsed);
    CHECK(serialize_cfg(parse_cfg(canonical)) == canonical);

    SUBCASE("generated models round-trip too") {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            GeneratedModel gen = gen_model(seed, 4);
            NetworkSpec back = parse_cfg(serialize_cfg(gen.spec));
            CHECK(back == gen.spec);
        }
    }
}

TEST_CASE("parse_cfg is total: mutated configs either parse or raise ParseError") {
    auto fixture = read_file(std::string(FIXTURE_DIR) + "/sample5.cfg");
    std::string base(fixture.begin(), fixture.end());

    std::mt19937_64 rng(8080);
    int parsed = 0, rejected = 0;
    for (int trial = 0; trial < 500; ++trial) {
        std::string text = base;
        int edits = 1 + static_cast<int>(rng() % 4);
        for (int e = 0; e < edits; ++e) {
            std::size_t pos = rng() % text.size();
            switch (rng() % 3) {
                case 0: text[pos] = static_cast<char>(' ' + rng() % 95); break;
                case 1: text.erase(pos, 1); break;
                case 2: text.insert(pos, 1, static_cast<char>(' ' + rng() % 95)); break;
            }
        }
        try {
            parse_cfg(text);
            ++parsed;
        } catch (const ParseError&) {
            ++rejected;
        }
        // anything else escaping fails the test case
    }
    CHECK(parsed + rejected == 500);
}

TEST_CASE("weight container framing") {
    GeneratedModel gen = gen_model(8, 3);
    auto bytes = weight_file_to_bytes(gen.weights);
    WeightFile back = weight_file_from_bytes(bytes);
    CHECK(back.layer_payloads == gen.weights.layer_payloads);
    validate_weights(gen.spec, back);

    SUBCASE("corrupt magic") {
        bytes[0] = 'X';
        CHECK_THROWS_AS(weight_file_from_bytes(bytes), FormatError);
    }
    SUBCASE("truncated payload") {
        bytes.pop_back();
        CHECK_THROWS_AS(weight_file_from_bytes(bytes), FormatError);
    }
    SUBCASE("payload length mismatch against the model") {
        WeightFile wrong = gen.weights;
        wrong.layer_payloads[0].resize(wrong.layer_payloads[0].size() - 4);
        CHECK_THROWS_AS(validate_weights(gen.spec, wrong), FormatError);
    }
}

TEST_CASE("ppm decoding") {
    SUBCASE("1x1 red pixel resized to 2x2") {
        Image img;
        img.w = 1;
        img.h = 1;
        img.rgb = {255, 0, 0};
        Tensor t = bilinear_resize(image_to_tensor(img), 2, 2);
        for (int y = 0; y < 2; ++y) {
            for (int x = 0; x < 2; ++x) {
                CHECK(t.at(0, y, x) == 1.0f);
                CHECK(t.at(1, y, x) == 0.0f);
                CHECK(t.at(2, y, x) == 0.0f);
            }
        }
    }
    SUBCASE("black-to-white ramp") {
        Image img;
        img.w = 2;
        img.h = 1;
        img.rgb = {0, 0, 0, 255, 255, 255};
        Tensor t = bilinear_resize(image_to_tensor(img), 1, 4);
        CHECK(t.at(0, 0, 0) == 0.0f);
        CHECK(t.at(0, 0, 3) == 1.0f);
        for (int x = 1; x < 4; ++x) CHECK(t.at(0, 0, x) > t.at(0, 0, x - 1));
        CHECK(t.at(0, 0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    }
    SUBCASE("P6 parse and identity resize is bitwise") {
        Image img;
        img.w = 3;
        img.h = 2;
        img.rgb.resize(18);
        for (std::size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = static_cast<std::uint8_t>(i * 13);
        auto bytes = write_ppm(img);
        Image back = read_ppm(bytes);
        CHECK(back.rgb == img.rgb);

        Tensor t = image_to_tensor(back);
        Tensor same = bilinear_resize(t, 2, 3);
        CHECK(same.data == t.data);
    }
    SUBCASE("header comments are allowed") {
        std::string header = "P6 # binary rgb\n# comment line\n2 1\n255\n";
        std::vector<std::uint8_t> bytes(header.begin(), header.end());
        bytes.insert(bytes.end(), {1, 2, 3, 4, 5, 6});
        Image img = read_ppm(bytes);
        CHECK(img.w == 2);
        CHECK(img.h == 1);
    }
    SUBCASE("ascii P3 is rejected") {
        std::string text = "P3\n1 1\n255\n255 0 0\n";
        std::vector<std::uint8_t> bytes(text.begin(), text.end());
        CHECK_THROWS_AS(read_ppm(bytes), FormatError);
    }
    SUBCASE("truncated pixels are rejected") {
        std::string header = "P6\n2 2\n255\n";
        std::vector<std::uint8_t> bytes(header.begin(), header.end());
        bytes.insert(bytes.end(), {9, 9, 9});
        CHECK_THROWS_AS(read_ppm(bytes), FormatError);
    }
}

TEST_CASE("stream_weights chunking") {
    std::uint64_t key = 3;

    SUBCASE("1000-byte image over 256-byte shared memory takes 4 invokes") {
        GeneratedModel gen = sized_model(240);  // image = 36 + 4*241 = 1000
        auto blob = testutil::encrypt_model(gen, key, 9);
        CHECK(blob_to_bytes(blob).size() == 1000);

        Session s = session_with_shm(256, key);
        build_remote_network(s, gen.spec);
        std::uint64_t before = s.ledger().invoke_count;
        std::size_t chunks = stream_weights(s, gen.spec, blob, 0);
        CHECK(chunks == 4);
        CHECK(s.ledger().invoke_count - before == 4);
    }
    SUBCASE("image exactly the shared memory size takes 1 invoke") {
        GeneratedModel gen = sized_model(240);
        auto blob = testutil::encrypt_model(gen, key, 9);
        Session s = session_with_shm(1000, key);
        build_remote_network(s, gen.spec);
        CHECK(stream_weights(s, gen.spec, blob, 0) == 1);
    }
    SUBCASE("44 MiB image over 776 KB shared memory takes 59 invokes") {
        // ceil(45056 KiB / 776 KiB) = 59
        GeneratedModel gen = sized_model(11534326);  // image = 44 MiB exactly
        auto blob = testutil::encrypt_model(gen, key, 9);
        CHECK(blob_to_bytes(blob).size() == 44ull * 1024 * 1024);

        Session s = session_with_shm(776 * 1024, key);
        build_remote_network(s, gen.spec);
        CHECK(stream_weights(s, gen.spec, blob, 0) == 59);
    }
    SUBCASE("chunking is content transparent for any chunk size") {
        GeneratedModel gen = gen_model(55, 4);
        auto blob = testutil::encrypt_model(gen, key, 11);
        for (std::size_t chunk : {std::size_t{64}, std::size_t{333}, std::size_t{4096},
                                  std::size_t{1} << 20}) {
            Session s = session_with_shm(1 << 20, key);
            build_remote_network(s, gen.spec);
            stream_weights(s, gen.spec, blob, chunk);
            auto loaded = testutil::reconstruct_loaded_payloads(*s.secure_state().network());
            CHECK(loaded == gen.weights.layer_payloads);
        }
    }
    SUBCASE("mismatched weights are rejected before any invoke") {
        GeneratedModel gen = gen_model(55, 4);
        GeneratedModel other = sized_model(10);
        auto blob = testutil::encrypt_model(other, key, 11);
        Session s = session_with_shm(1 << 20, key);
        build_remote_network(s, gen.spec);
        CHECK_THROWS_AS(stream_weights(s, gen.spec, blob, 0), FormatError);
    }
}

TEST_CASE("a model with no weighted layers still streams its empty container") {
    NetworkSpec spec = parse_cfg("[net]\nchannels=1\nheight=2\nwidth=2\n\n[softmax]\n");
    WeightFile empty;
    std::uint64_t key = 1;
    EncryptedBlob blob = encrypt_weights(weight_file_to_bytes(empty), key, 3);

    Session s = session_with_shm(4096, key);
    build_remote_network(s, spec);
    CHECK(stream_weights(s, spec, blob, 0) == 1);  // 32-byte image, one chunk

    Tensor input(1, 2, 2);
    input.data = {1, 2, 3, 4};
    send_input(s, input);
    run_infer(s);
    Tensor probs = fetch_result(s, key);
    CHECK(probs.size() == 4);
}

TEST_CASE("infer ledger accounting: layers + chunks + 3") {
    std::uint64_t key = 21;
    GeneratedModel gen = gen_model(777, 4);
    auto blob = testutil::encrypt_model(gen, key, 2);

    Session s = session_with_shm(16384, key);
    build_remote_network(s, gen.spec);
    std::size_t chunks = stream_weights(s, gen.spec, blob, 0);
    Tensor input(gen.spec.c, gen.spec.h, gen.spec.w);
    send_input(s, input);
    run_infer(s);
    fetch_result(s, key);
    CHECK(s.ledger().invoke_count == gen.spec.layers.size() + chunks + 3);
}
