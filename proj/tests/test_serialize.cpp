#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "npp/serialize.hpp"
#include "oracles.hpp"

using namespace npp;

namespace {

std::string tmp_path(const std::string& name) {
    return std::string("/tmp/npp_test_") + name;
}

} // namespace

TEST_CASE("save/load round-trips bit-exactly after f32 quantization") {
    Rng rng(909);
    Model m = make_mlp({1, 6, 6}, 12, 4, 909);
    m.meta.name = "roundtrip";
    m.meta.fingerprint = {1, 2, 0xdeadbeefull};

    std::string path = tmp_path("roundtrip.nppm");
    save_model(m, path);
    Model once = load_model(path);
    // weights quantize to f32 on the first save; after that the file is a fixpoint
    save_model(once, path);
    Model twice = load_model(path);
    CHECK(models_same_bits(once, twice));
    CHECK(once.meta.name == m.meta.name);
    CHECK(once.meta.seed == m.meta.seed);
    CHECK(once.meta.fingerprint == m.meta.fingerprint);
    CHECK(once.input_shape == m.input_shape);
    (void)rng;
}

TEST_CASE("saved bytes are a pure function of the model") {
    Model m = make_allcnn({1, 12, 12}, 16, 5, 4);
    CHECK(model_to_bytes(m) == model_to_bytes(m));
}

TEST_CASE("wrong magic is a distinct error") {
    std::string bytes = model_to_bytes(make_mlp({4}, 4, 2, 1));
    bytes[0] = 'X';
    try {
        model_from_bytes(bytes);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
    }
}

TEST_CASE("unsupported version is a distinct error") {
    std::string bytes = model_to_bytes(make_mlp({4}, 4, 2, 1));
    bytes[4] = 9; // version LE low byte
    try {
        model_from_bytes(bytes);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("unsupported version") != std::string::npos);
    }
}

TEST_CASE("truncated payload is a distinct error") {
    std::string bytes = model_to_bytes(make_mlp({4}, 4, 2, 1));
    // header declares the full layer stack but the blob is cut short
    bytes.resize(bytes.size() - 10);
    try {
        model_from_bytes(bytes);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
}

TEST_CASE("trailing bytes are rejected") {
    std::string bytes = model_to_bytes(make_mlp({4}, 4, 2, 1));
    bytes += "xx";
    CHECK_THROWS_AS(model_from_bytes(bytes), FormatError);
}

TEST_CASE("missing file raises IoError") {
    CHECK_THROWS_AS(load_model("/tmp/npp_no_such_file.nppm"), IoError);
}

TEST_CASE("format layout: magic, version, header length") {
    Model m = make_mlp({4}, 4, 2, 1);
    std::string bytes = model_to_bytes(m);
    CHECK(bytes.compare(0, 4, "NPPM") == 0);
    CHECK(static_cast<unsigned char>(bytes[4]) == 1); // version 1, little-endian
    CHECK(static_cast<unsigned char>(bytes[5]) == 0);
    std::uint32_t hdr_len = static_cast<unsigned char>(bytes[8]) |
                            (static_cast<unsigned char>(bytes[9]) << 8) |
                            (static_cast<unsigned char>(bytes[10]) << 16) |
                            (static_cast<unsigned char>(bytes[11]) << 24);
    CHECK(bytes.size() > 12 + hdr_len);
    CHECK(bytes[12] == '{'); // JSON header starts right after the length
}

TEST_CASE("conv models survive the round trip") {
    Model m = make_allcnn({1, 12, 12}, 16, 5, 4);
    std::string path = tmp_path("conv.nppm");
    save_model(m, path);
    Model a = load_model(path);
    save_model(a, path);
    Model b = load_model(path);
    CHECK(models_same_bits(a, b));
    std::remove(path.c_str());
}
