#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "npp/error.hpp"
#include "npp/rng.hpp"
#include "npp/tensor.hpp"

namespace npp {

struct Sample {
    Tensor input;
    int label = 0;
    std::uint64_t hash = 0;
};

// Content hash over the sample tensor (64-bit LE words) plus the label byte.
// Deterministic function of the sample bytes; used for the zero-shot check.
inline std::uint64_t sample_hash(const Tensor& input, int label) {
    std::uint64_t h = fnv1a64(input.data(), input.numel() * sizeof(double));
    auto b = static_cast<unsigned char>(label & 0xff);
    return fnv1a64(&b, 1, h);
}

struct LabeledDataset {
    std::vector<Sample> samples;
    std::size_t class_count = 0;
    std::string split = "train"; // train | test | probe

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    std::set<std::uint64_t> hashes() const {
        std::set<std::uint64_t> out;
        for (const auto& s : samples) out.insert(s.hash);
        return out;
    }

    std::size_t count_label(int label) const {
        std::size_t n = 0;
        for (const auto& s : samples) {
            if (s.label == label) ++n;
        }
        return n;
    }
};

inline void validate_dataset(const LabeledDataset& ds) {
    for (const auto& s : ds.samples) {
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= ds.class_count) {
            throw ConfigError("label " + std::to_string(s.label) + " out of range [0, " +
                              std::to_string(ds.class_count) + ")");
        }
    }
}

namespace detail {

inline std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw FormatError(path + ": truncated header");
    }
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

} // namespace detail

// IDX (big-endian) loader: magic 0x00000803 for images, 0x00000801 for
// labels. Pixels are scaled to [0, 1]; sample shape is {1, rows, cols}.
inline LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                               const std::string& split = "train", std::size_t class_count = 0) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open " + labels_path);

    std::uint32_t img_magic = detail::read_u32_be(img, images_path);
    if (img_magic != 0x00000803u) {
        throw FormatError(images_path + ": bad magic (expected 0x00000803)");
    }
    std::uint32_t lab_magic = detail::read_u32_be(lab, labels_path);
    if (lab_magic != 0x00000801u) {
        throw FormatError(labels_path + ": bad magic (expected 0x00000801)");
    }

    std::uint32_t n_img = detail::read_u32_be(img, images_path);
    std::uint32_t rows = detail::read_u32_be(img, images_path);
    std::uint32_t cols = detail::read_u32_be(img, images_path);
    std::uint32_t n_lab = detail::read_u32_be(lab, labels_path);
    if (n_img != n_lab) {
        throw FormatError("count mismatch: " + std::to_string(n_img) + " images vs " +
                          std::to_string(n_lab) + " labels");
    }
    if (n_img == 0 || rows == 0 || cols == 0 || rows > 4096 || cols > 4096 ||
        n_img > 10'000'000u) {
        throw FormatError(images_path + ": implausible header dimensions " + std::to_string(n_img) +
                          "x" + std::to_string(rows) + "x" + std::to_string(cols));
    }

    std::vector<unsigned char> pixels(std::size_t(n_img) * rows * cols);
    if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()))) {
        throw FormatError(images_path + ": truncated payload");
    }
    std::vector<unsigned char> labels(n_img);
    if (!lab.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(labels.size()))) {
        throw FormatError(labels_path + ": truncated payload");
    }

    LabeledDataset ds;
    ds.split = split;
    int max_label = 0;
    ds.samples.reserve(n_img);
    for (std::size_t i = 0; i < n_img; ++i) {
        Tensor t({1, rows, cols});
        const unsigned char* px = pixels.data() + i * rows * cols;
        for (std::size_t p = 0; p < std::size_t(rows) * cols; ++p) {
            t[p] = static_cast<double>(px[p]) / 255.0;
        }
        int label = labels[i];
        max_label = std::max(max_label, label);
        std::uint64_t h = sample_hash(t, label);
        ds.samples.push_back({std::move(t), label, h});
    }
    ds.class_count = class_count ? class_count : static_cast<std::size_t>(max_label) + 1;
    validate_dataset(ds);
    return ds;
}

// D' = D \ {samples of `cls`}; order of the survivors is preserved.
inline LabeledDataset remove_class(const LabeledDataset& ds, int cls) {
    if (cls < 0 || static_cast<std::size_t>(cls) >= ds.class_count) {
        throw ConfigError("remove_class: class " + std::to_string(cls) + " out of range");
    }
    LabeledDataset out;
    out.class_count = ds.class_count;
    out.split = ds.split;
    for (const auto& s : ds.samples) {
        if (s.label != cls) out.samples.push_back(s);
    }
    return out;
}

struct ProbeSpec {
    int target_class = 0;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;
};

// Draw n target-class samples from the held-out test split under a seeded
// shuffle, and reject any draw whose hash appears in the training
// fingerprint. Probe data never comes from the training set.
inline LabeledDataset make_probe_set(const LabeledDataset& test_set, const ProbeSpec& spec,
                                     const std::set<std::uint64_t>& training_fingerprint) {
    if (spec.sample_count == 0) throw ConfigError("probe sample_count must be >= 1");
    if (test_set.split != "test") {
        throw ConfigError("probe source must be the test split, got '" + test_set.split + "'");
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < test_set.samples.size(); ++i) {
        if (test_set.samples[i].label == spec.target_class) idx.push_back(i);
    }
    if (idx.size() < spec.sample_count) {
        throw ConfigError("insufficient samples: need " + std::to_string(spec.sample_count) +
                          " of class " + std::to_string(spec.target_class) + ", test split has " +
                          std::to_string(idx.size()));
    }
    Rng rng(derive_seed(spec.seed, "probe"));
    rng.shuffle(idx);

    LabeledDataset probe;
    probe.class_count = test_set.class_count;
    probe.split = "probe";
    for (std::size_t i = 0; i < spec.sample_count; ++i) {
        const Sample& s = test_set.samples[idx[i]];
        if (training_fingerprint.count(s.hash)) {
            throw ZeroShotError("probe sample hash collides with training fingerprint");
        }
        probe.samples.push_back(s);
    }
    return probe;
}

// Gaussian blobs with class-separated means; fast substrate for trainer and
// pipeline property tests.
inline LabeledDataset synth_blobs(std::size_t class_count, std::size_t per_class,
                                  std::size_t dimension, std::uint64_t seed,
                                  double separation = 6.0) {
    if (class_count == 0 || per_class == 0 || dimension == 0) {
        throw ConfigError("synth_blobs: counts must be positive");
    }
    Rng rng(derive_seed(seed, "blobs"));
    LabeledDataset ds;
    ds.class_count = class_count;
    for (std::size_t c = 0; c < class_count; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            Tensor t({dimension});
            for (std::size_t d = 0; d < dimension; ++d) {
                double mean = (d == c % dimension) ? separation : 0.0;
                t[d] = rng.gaussian(mean, 1.0);
            }
            int label = static_cast<int>(c);
            ds.samples.push_back({t, label, sample_hash(t, label)});
        }
    }
    return ds;
}

inline nlohmann::json dataset_manifest(const LabeledDataset& ds,
                                       const std::vector<std::string>& sources) {
    return nlohmann::json{{"N_c", ds.class_count},
                          {"hash_count", ds.samples.size()},
                          {"sources", sources},
                          {"split", ds.split}};
}

inline void write_manifest(const LabeledDataset& ds, const std::vector<std::string>& sources,
                           const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << dataset_manifest(ds, sources).dump(2) << "\n";
}

} // namespace npp
