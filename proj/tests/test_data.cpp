#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "npp/dataset.hpp"
#include "npp/digits.hpp"

using namespace npp;

namespace {

struct IdxFixture {
    std::string images = "/tmp/npp_test_images.idx";
    std::string labels = "/tmp/npp_test_labels.idx";

    IdxFixture(std::size_t n = 12, std::uint64_t seed = 7) {
        DigitImages imgs = synth_digit_images(n, seed);
        write_idx(imgs, images, labels);
    }
    ~IdxFixture() {
        std::remove(images.c_str());
        std::remove(labels.c_str());
    }
};

void patch_byte(const std::string& path, std::size_t offset, unsigned char value) {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(offset));
    f.write(reinterpret_cast<const char*>(&value), 1);
}

} // namespace

TEST_CASE("IDX round trip: file bytes match the in-memory dataset") {
    IdxFixture fx(20, 3);
    DigitImages imgs = synth_digit_images(20, 3);
    LabeledDataset from_file = load_idx(fx.images, fx.labels, "test");
    LabeledDataset from_mem = digit_dataset(imgs, "test");
    REQUIRE(from_file.size() == 20);
    CHECK(from_file.samples[0].input.shape() == Shape{1, 28, 28});
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(from_file.samples[i].label == from_mem.samples[i].label);
        CHECK(from_file.samples[i].hash == from_mem.samples[i].hash);
    }
    // pixels scaled into [0, 1]
    for (double v : from_file.samples[0].input.vec()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("loading is deterministic: identical files, identical hashes") {
    IdxFixture fx(8, 9);
    auto a = load_idx(fx.images, fx.labels);
    auto b = load_idx(fx.images, fx.labels);
    CHECK(a.hashes() == b.hashes());
}

TEST_CASE("wrong IDX magic is a bad-magic error") {
    IdxFixture fx;
    patch_byte(fx.images, 3, 0x42);
    try {
        load_idx(fx.images, fx.labels);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
    }
}

TEST_CASE("image/label count mismatch is its own error") {
    IdxFixture fx(12);
    patch_byte(fx.labels, 7, 11); // label count 12 -> 11
    try {
        load_idx(fx.images, fx.labels);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("count mismatch") != std::string::npos);
    }
}

TEST_CASE("truncated IDX payload is detected") {
    IdxFixture fx(12);
    {
        std::ifstream in(fx.images, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::ofstream out(fx.images, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 100));
    }
    try {
        load_idx(fx.images, fx.labels);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
}

TEST_CASE("missing files raise IoError") {
    CHECK_THROWS_AS(load_idx("/tmp/npp_missing.idx", "/tmp/npp_missing2.idx"), IoError);
}

TEST_CASE("remove_class drops exactly the target class, in order") {
    DigitImages imgs = synth_digit_images(40, 5);
    LabeledDataset ds = digit_dataset(imgs, "train");
    std::size_t ones = ds.count_label(1);
    CHECK(ones > 0);
    LabeledDataset pruned = remove_class(ds, 1);
    CHECK(pruned.count_label(1) == 0);
    CHECK(pruned.size() + ones == ds.size());
    // order of survivors preserved
    std::size_t j = 0;
    for (const auto& s : ds.samples) {
        if (s.label == 1) continue;
        CHECK(pruned.samples[j].hash == s.hash);
        ++j;
    }
    // removing again is a no-op
    LabeledDataset again = remove_class(pruned, 1);
    CHECK(again.size() == pruned.size());
    CHECK_THROWS_AS(remove_class(ds, 10), ConfigError);
}

TEST_CASE("probe sets come from the test split, seeded and disjoint") {
    DigitImages imgs = synth_digit_images(200, 5);
    LabeledDataset test_set = digit_dataset(imgs, "test");
    std::set<std::uint64_t> fingerprint; // empty: nothing trained yet

    ProbeSpec spec{1, 10, 77};
    LabeledDataset probe = make_probe_set(test_set, spec, fingerprint);
    CHECK(probe.size() == 10);
    CHECK(probe.split == "probe");
    for (const auto& s : probe.samples) CHECK(s.label == 1);

    // deterministic per seed, different across seeds
    LabeledDataset probe2 = make_probe_set(test_set, spec, fingerprint);
    CHECK(probe.hashes() == probe2.hashes());
    ProbeSpec other{1, 10, 78};
    LabeledDataset probe3 = make_probe_set(test_set, other, fingerprint);
    CHECK(probe.hashes() != probe3.hashes());
}

TEST_CASE("probe construction errors: wrong split, too few samples, overlap") {
    DigitImages imgs = synth_digit_images(100, 5);
    LabeledDataset test_set = digit_dataset(imgs, "test");
    std::set<std::uint64_t> fingerprint;

    LabeledDataset train_tagged = test_set;
    train_tagged.split = "train";
    CHECK_THROWS_AS(make_probe_set(train_tagged, ProbeSpec{1, 5, 0}, fingerprint), ConfigError);

    CHECK_THROWS_AS(make_probe_set(test_set, ProbeSpec{1, 5000, 0}, fingerprint), ConfigError);

    // fingerprint contains a test-set hash -> disjointness violation
    std::set<std::uint64_t> dirty = fingerprint;
    for (const auto& s : test_set.samples) {
        if (s.label == 1) dirty.insert(s.hash); // poison every candidate
    }
    CHECK_THROWS_AS(make_probe_set(test_set, ProbeSpec{1, 5, 0}, dirty), ZeroShotError);
}

TEST_CASE("synthetic blobs: balance, determinism, separation") {
    LabeledDataset ds = synth_blobs(2, 10, 4, 9);
    CHECK(ds.size() == 20);
    CHECK(ds.count_label(0) == 10);
    CHECK(ds.count_label(1) == 10);

    LabeledDataset same = synth_blobs(2, 10, 4, 9);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds.samples[i].hash == same.samples[i].hash);
    }

    // 10-sigma separation: nearest-mean classifies perfectly
    LabeledDataset wide = synth_blobs(3, 50, 5, 13, 10.0);
    std::size_t ok = 0;
    for (const auto& s : wide.samples) {
        double best = 1e300;
        int best_c = -1;
        for (int c = 0; c < 3; ++c) {
            double d2 = 0.0;
            for (std::size_t d = 0; d < 5; ++d) {
                double mean = (d == static_cast<std::size_t>(c) % 5) ? 10.0 : 0.0;
                d2 += (s.input[d] - mean) * (s.input[d] - mean);
            }
            if (d2 < best) {
                best = d2;
                best_c = c;
            }
        }
        ok += best_c == s.label;
    }
    CHECK(ok == wide.size());
    CHECK_THROWS_AS(synth_blobs(0, 1, 1, 0), ConfigError);
}

TEST_CASE("dataset manifest records sources, split, counts") {
    DigitImages imgs = synth_digit_images(10, 5);
    LabeledDataset ds = digit_dataset(imgs, "train");
    auto j = dataset_manifest(ds, {"a.idx", "b.idx"});
    CHECK(j["N_c"] == 10);
    CHECK(j["hash_count"] == 10);
    CHECK(j["split"] == "train");
    CHECK(j["sources"].size() == 2);
}
