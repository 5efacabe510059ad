#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "npp/model.hpp"

namespace npp {

// NPPM model file:
//   magic "NPPM" | u32 LE version (1) | u32 LE header length | JSON header |
//   weight blobs, f32 LE, in header-declared layer order (weight then bias).
//
// Weights are stored as 32-bit floats; a freshly trained model quantizes on
// its first save, after which save/load round-trips bit-exactly.

inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_f32_le(std::string& out, double v) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32_le(out, bits);
}

inline std::uint32_t take_u32_le(const std::string& buf, std::size_t& pos) {
    if (pos + 4 > buf.size()) throw FormatError("truncated payload");
    auto b = [&](std::size_t i) { return std::uint32_t(static_cast<unsigned char>(buf[pos + i])); };
    std::uint32_t v = b(0) | (b(1) << 8) | (b(2) << 16) | (b(3) << 24);
    pos += 4;
    return v;
}

inline double take_f32_le(const std::string& buf, std::size_t& pos) {
    std::uint32_t bits = take_u32_le(buf, pos);
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

inline nlohmann::json layer_descriptor(const Layer& layer) {
    if (const auto* d = std::get_if<Dense>(&layer)) {
        return {{"kind", "dense"}, {"in", d->in_dim()}, {"out", d->out_dim()}};
    }
    if (const auto* c = std::get_if<Conv2D>(&layer)) {
        return {{"kind", "conv2d"}, {"in_ch", c->in_ch()}, {"out_ch", c->out_ch()},
                {"kh", c->kh()},    {"kw", c->kw()},       {"stride", c->stride},
                {"padding", c->padding}};
    }
    if (const auto* m = std::get_if<MaxPool2D>(&layer)) {
        return {{"kind", "maxpool2d"}, {"window", m->window}, {"stride", m->stride}};
    }
    if (std::holds_alternative<ReLU>(layer)) return {{"kind", "relu"}};
    return {{"kind", "flatten"}};
}

} // namespace detail

inline std::string model_to_bytes(const Model& m) {
    nlohmann::json header;
    header["class_count"] = m.class_count;
    header["input_shape"] = m.input_shape;
    header["layers"] = nlohmann::json::array();
    for (const auto& l : m.layers) header["layers"].push_back(detail::layer_descriptor(l));
    std::vector<std::string> fp;
    for (std::uint64_t h : m.meta.fingerprint) fp.push_back(detail::hex64(h));
    header["meta"] = {{"fingerprint", fp}, {"name", m.meta.name}, {"seed", m.meta.seed}};

    std::string hdr = header.dump();
    std::string out = "NPPM";
    detail::put_u32_le(out, kModelVersion);
    detail::put_u32_le(out, static_cast<std::uint32_t>(hdr.size()));
    out += hdr;
    for (const auto& l : m.layers) {
        if (const auto* d = std::get_if<Dense>(&l)) {
            for (double v : d->weight.vec()) detail::put_f32_le(out, v);
            for (double v : d->bias.vec()) detail::put_f32_le(out, v);
        } else if (const auto* c = std::get_if<Conv2D>(&l)) {
            for (double v : c->kernel.vec()) detail::put_f32_le(out, v);
            for (double v : c->bias.vec()) detail::put_f32_le(out, v);
        }
    }
    return out;
}

inline Model model_from_bytes(const std::string& buf) {
    if (buf.size() < 4 || buf.compare(0, 4, "NPPM") != 0) {
        throw FormatError("bad magic: not an NPPM model file");
    }
    std::size_t pos = 4;
    std::uint32_t version = detail::take_u32_le(buf, pos);
    if (version != kModelVersion) {
        throw FormatError("unsupported version " + std::to_string(version));
    }
    std::uint32_t hdr_len = detail::take_u32_le(buf, pos);
    if (pos + hdr_len > buf.size()) throw FormatError("truncated payload: header cut short");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(buf.substr(pos, hdr_len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed header: ") + e.what());
    }
    pos += hdr_len;

    Model m;
    try {
        m.class_count = header.at("class_count").get<std::size_t>();
        m.input_shape = header.at("input_shape").get<Shape>();
        m.meta.name = header.at("meta").at("name").get<std::string>();
        m.meta.seed = header.at("meta").at("seed").get<std::uint64_t>();
        for (const auto& h : header.at("meta").at("fingerprint")) {
            try {
                m.meta.fingerprint.insert(std::stoull(h.get<std::string>(), nullptr, 16));
            } catch (const std::logic_error&) {
                throw FormatError("malformed header: bad fingerprint hash '" +
                                  h.get<std::string>() + "'");
            }
        }
        for (const auto& ld : header.at("layers")) {
            std::string kind = ld.at("kind").get<std::string>();
            if (kind == "dense") {
                std::size_t in = ld.at("in").get<std::size_t>();
                std::size_t out = ld.at("out").get<std::size_t>();
                Dense d{Tensor({out, in}), Tensor({out})};
                for (double& v : d.weight.vec()) v = detail::take_f32_le(buf, pos);
                for (double& v : d.bias.vec()) v = detail::take_f32_le(buf, pos);
                m.layers.push_back(std::move(d));
            } else if (kind == "conv2d") {
                Conv2D c{Tensor({ld.at("out_ch").get<std::size_t>(), ld.at("in_ch").get<std::size_t>(),
                                 ld.at("kh").get<std::size_t>(), ld.at("kw").get<std::size_t>()}),
                         Tensor({ld.at("out_ch").get<std::size_t>()}),
                         ld.at("stride").get<std::size_t>(), ld.at("padding").get<std::size_t>()};
                for (double& v : c.kernel.vec()) v = detail::take_f32_le(buf, pos);
                for (double& v : c.bias.vec()) v = detail::take_f32_le(buf, pos);
                m.layers.push_back(std::move(c));
            } else if (kind == "maxpool2d") {
                m.layers.push_back(
                    MaxPool2D{ld.at("window").get<std::size_t>(), ld.at("stride").get<std::size_t>()});
            } else if (kind == "relu") {
                m.layers.push_back(ReLU{});
            } else if (kind == "flatten") {
                m.layers.push_back(Flatten{});
            } else {
                throw FormatError("unknown layer kind '" + kind + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed header: ") + e.what());
    }
    if (pos != buf.size()) throw FormatError("trailing bytes after payload");
    validate_model(m);
    return m;
}

inline void save_model(const Model& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    std::string bytes = model_to_bytes(m);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

inline Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_bytes(ss.str());
}

} // namespace npp
