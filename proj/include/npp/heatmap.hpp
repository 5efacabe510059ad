#pragma once

#include <cmath>
#include <fstream>
#include <string>

#include "npp/lrp.hpp"

namespace npp {

// Input relevance as a binary PGM (P5), max-abs symmetric scaling: zero
// relevance maps to mid-gray, +max to white, -max to black. Multi-channel
// input is collapsed by summing channels.
inline std::string relevance_to_pgm(const Tensor& input_relevance) {
    Shape s = input_relevance.shape();
    std::size_t h = 0, w = 0;
    Tensor plane;
    if (s.size() == 3) {
        h = s[1];
        w = s[2];
        plane = Tensor({h, w});
        for (std::size_t c = 0; c < s[0]; ++c) {
            for (std::size_t i = 0; i < h * w; ++i) plane[i] += input_relevance[c * h * w + i];
        }
    } else if (s.size() == 2) {
        h = s[0];
        w = s[1];
        plane = input_relevance;
    } else {
        h = 1;
        w = input_relevance.numel();
        plane = input_relevance.reshaped({1, w});
    }
    double amax = plane.max_abs();
    std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    for (std::size_t i = 0; i < h * w; ++i) {
        double v = amax > 0.0 ? plane[i] / amax : 0.0; // [-1, 1]
        int g = static_cast<int>(std::lround(127.5 * (v + 1.0)));
        g = std::max(0, std::min(255, g));
        out.push_back(static_cast<char>(static_cast<unsigned char>(g)));
    }
    return out;
}

inline void write_pgm(const Tensor& input_relevance, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    std::string bytes = relevance_to_pgm(input_relevance);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

// Filename pattern used by the attribute command: <sample-id>_<rule>.pgm
inline std::string heatmap_filename(const std::string& sample_id, const PropagationRule& rule) {
    return sample_id + "_" + rule.name() + ".pgm";
}

} // namespace npp
