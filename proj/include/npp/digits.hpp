#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "npp/dataset.hpp"
#include "npp/rng.hpp"

namespace npp {

// Procedural 28x28 handwritten-style digit corpus, written in the standard
// IDX format. Stands in for MNIST wherever real files are not on disk:
// glyph skeletons get a per-sample affine warp, stroke-width jitter and
// pixel noise, so a trained classifier generalizes rather than memorizes.

struct DigitImages {
    std::size_t rows = 28, cols = 28;
    std::vector<std::uint8_t> pixels; // count * rows * cols
    std::vector<std::uint8_t> labels;

    std::size_t count() const { return labels.size(); }
};

namespace detail {

struct Pt {
    double x, y;
};

// Each digit is a set of polylines in the unit square (y down). Arcs are
// sampled to polylines; angles sweep right -> down -> left -> up.
inline void arc(std::vector<std::vector<Pt>>& out, double cx, double cy, double rx, double ry,
                double a0_deg, double a1_deg, int steps = 20) {
    std::vector<Pt> line;
    for (int i = 0; i <= steps; ++i) {
        double a = (a0_deg + (a1_deg - a0_deg) * i / steps) * 3.14159265358979323846 / 180.0;
        line.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
    out.push_back(std::move(line));
}

inline std::vector<std::vector<Pt>> digit_skeleton(int digit) {
    std::vector<std::vector<Pt>> s;
    switch (digit) {
        case 0:
            arc(s, 0.50, 0.50, 0.22, 0.36, 0.0, 360.0, 28);
            break;
        case 1:
            s.push_back({{0.38, 0.28}, {0.54, 0.12}, {0.54, 0.88}});
            break;
        case 2:
            arc(s, 0.50, 0.32, 0.22, 0.20, 180.0, 355.0);
            s.push_back({{0.72, 0.34}, {0.28, 0.88}});
            s.push_back({{0.28, 0.88}, {0.74, 0.88}});
            break;
        case 3:
            arc(s, 0.45, 0.30, 0.19, 0.19, 215.0, 450.0);
            arc(s, 0.45, 0.67, 0.21, 0.21, 270.0, 510.0);
            break;
        case 4:
            s.push_back({{0.62, 0.12}, {0.62, 0.88}});
            s.push_back({{0.62, 0.12}, {0.26, 0.58}, {0.78, 0.58}});
            break;
        case 5:
            s.push_back({{0.70, 0.13}, {0.32, 0.13}, {0.36, 0.42}});
            arc(s, 0.47, 0.62, 0.23, 0.23, 250.0, 515.0);
            break;
        case 6:
            s.push_back({{0.63, 0.13}, {0.50, 0.33}, {0.38, 0.55}});
            arc(s, 0.50, 0.66, 0.20, 0.20, 0.0, 360.0, 24);
            break;
        case 7:
            s.push_back({{0.26, 0.14}, {0.76, 0.14}, {0.42, 0.88}});
            break;
        case 8:
            arc(s, 0.50, 0.30, 0.17, 0.17, 0.0, 360.0, 24);
            arc(s, 0.50, 0.67, 0.21, 0.21, 0.0, 360.0, 24);
            break;
        default:
            arc(s, 0.50, 0.32, 0.19, 0.19, 0.0, 360.0, 24);
            s.push_back({{0.69, 0.34}, {0.62, 0.65}, {0.52, 0.88}});
            break;
    }
    return s;
}

inline double seg_dist(double px, double py, Pt a, Pt b) {
    double dx = b.x - a.x, dy = b.y - a.y;
    double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
    t = std::max(0.0, std::min(1.0, t));
    double qx = a.x + t * dx - px, qy = a.y + t * dy - py;
    return std::sqrt(qx * qx + qy * qy);
}

inline void render_digit(Rng& rng, int digit, std::uint8_t* out28x28) {
    const double cx = 14.0, cy = 14.0;
    double rot = rng.uniform(-0.22, 0.22);
    double sx = rng.uniform(0.82, 1.12), sy = rng.uniform(0.82, 1.12);
    double shear = rng.uniform(-0.18, 0.18);
    double tx = rng.uniform(-2.2, 2.2), ty = rng.uniform(-2.2, 2.2);
    double thick = rng.uniform(0.7, 1.6);
    double bright = rng.uniform(0.72, 1.0);
    double noise_sd = rng.uniform(0.01, 0.07) * 255.0;

    double ca = std::cos(rot), sa = std::sin(rot);
    auto warp = [&](Pt p) -> Pt {
        double x = (p.x - 0.5) * 24.0 * sx, y = (p.y - 0.5) * 24.0 * sy;
        x += shear * y;
        return {cx + ca * x - sa * y + tx, cy + sa * x + ca * y + ty};
    };

    std::vector<double> canvas(28 * 28, 0.0);
    for (const auto& line : digit_skeleton(digit)) {
        for (std::size_t i = 0; i + 1 < line.size(); ++i) {
            Pt a = warp(line[i]), b = warp(line[i + 1]);
            int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - thick - 1.5)));
            int x1 = std::min(27, static_cast<int>(std::ceil(std::max(a.x, b.x) + thick + 1.5)));
            int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - thick - 1.5)));
            int y1 = std::min(27, static_cast<int>(std::ceil(std::max(a.y, b.y) + thick + 1.5)));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    double d = seg_dist(x + 0.5, y + 0.5, a, b);
                    double v = (thick + 0.6 - d) / 0.6;
                    if (v > 0.0) {
                        double& c = canvas[y * 28 + x];
                        c = std::max(c, std::min(1.0, v));
                    }
                }
            }
        }
    }
    for (int i = 0; i < 28 * 28; ++i) {
        double v = canvas[i] * bright * 255.0 + rng.gaussian(0.0, noise_sd);
        out28x28[i] = static_cast<std::uint8_t>(std::max(0.0, std::min(255.0, std::round(v))));
    }
}

} // namespace detail

// Balanced digit split: labels cycle 0..9, then the sample order is
// shuffled. Deterministic per seed.
inline DigitImages synth_digit_images(std::size_t count, std::uint64_t seed) {
    if (count == 0) throw ConfigError("digit image count must be positive");
    DigitImages out;
    out.pixels.resize(count * 28 * 28);
    out.labels.resize(count);
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(seed, "digit-order"));
    shuffle_rng.shuffle(order);
    Rng rng(derive_seed(seed, "digit-pixels"));
    for (std::size_t i = 0; i < count; ++i) {
        int digit = static_cast<int>(i % 10);
        out.labels[order[i]] = static_cast<std::uint8_t>(digit);
        detail::render_digit(rng, digit, out.pixels.data() + order[i] * 28 * 28);
    }
    return out;
}

namespace detail {

inline void write_u32_be(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

} // namespace detail

inline void write_idx(const DigitImages& imgs, const std::string& images_path,
                      const std::string& labels_path) {
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot write " + images_path);
    detail::write_u32_be(img, 0x00000803u);
    detail::write_u32_be(img, static_cast<std::uint32_t>(imgs.count()));
    detail::write_u32_be(img, static_cast<std::uint32_t>(imgs.rows));
    detail::write_u32_be(img, static_cast<std::uint32_t>(imgs.cols));
    img.write(reinterpret_cast<const char*>(imgs.pixels.data()),
              static_cast<std::streamsize>(imgs.pixels.size()));
    if (!img) throw IoError("write failed: " + images_path);

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot write " + labels_path);
    detail::write_u32_be(lab, 0x00000801u);
    detail::write_u32_be(lab, static_cast<std::uint32_t>(imgs.count()));
    lab.write(reinterpret_cast<const char*>(imgs.labels.data()),
              static_cast<std::streamsize>(imgs.labels.size()));
    if (!lab) throw IoError("write failed: " + labels_path);
}

// In-memory dataset with exactly the bytes -> [0,1] scaling and hashing the
// IDX loader applies, so file and memory paths agree hash-for-hash.
inline LabeledDataset digit_dataset(const DigitImages& imgs, const std::string& split) {
    LabeledDataset ds;
    ds.class_count = 10;
    ds.split = split;
    ds.samples.reserve(imgs.count());
    for (std::size_t i = 0; i < imgs.count(); ++i) {
        Tensor t({1, imgs.rows, imgs.cols});
        const std::uint8_t* px = imgs.pixels.data() + i * imgs.rows * imgs.cols;
        for (std::size_t p = 0; p < imgs.rows * imgs.cols; ++p) {
            t[p] = static_cast<double>(px[p]) / 255.0;
        }
        int label = imgs.labels[i];
        std::uint64_t h = sample_hash(t, label);
        ds.samples.push_back({std::move(t), label, h});
    }
    return ds;
}

} // namespace npp
