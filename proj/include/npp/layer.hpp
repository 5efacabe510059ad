#pragma once

#include <algorithm>
#include <string>
#include <variant>

#include "npp/tensor.hpp"

namespace npp {

// weight: {out, in}; bias: {out}
struct Dense {
    Tensor weight;
    Tensor bias;

    std::size_t in_dim() const { return weight.dim(1); }
    std::size_t out_dim() const { return weight.dim(0); }
};

// kernel: {out_ch, in_ch, kh, kw}; bias: {out_ch}; zero padding
struct Conv2D {
    Tensor kernel;
    Tensor bias;
    std::size_t stride = 1;
    std::size_t padding = 0;

    std::size_t out_ch() const { return kernel.dim(0); }
    std::size_t in_ch() const { return kernel.dim(1); }
    std::size_t kh() const { return kernel.dim(2); }
    std::size_t kw() const { return kernel.dim(3); }
};

struct MaxPool2D {
    std::size_t window = 2;
    std::size_t stride = 2;
};

struct ReLU {};

struct Flatten {};

using Layer = std::variant<Dense, Conv2D, MaxPool2D, ReLU, Flatten>;

enum class LayerKind { Dense, Conv2D, MaxPool2D, ReLU, Flatten };

inline LayerKind layer_kind(const Layer& l) {
    return static_cast<LayerKind>(l.index());
}

inline std::string layer_kind_name(const Layer& l) {
    switch (layer_kind(l)) {
        case LayerKind::Dense: return "dense";
        case LayerKind::Conv2D: return "conv2d";
        case LayerKind::MaxPool2D: return "maxpool2d";
        case LayerKind::ReLU: return "relu";
        case LayerKind::Flatten: return "flatten";
    }
    return "?";
}

// Internal consistency of a layer's own parameters.
inline void validate_layer(const Layer& layer) {
    if (const auto* d = std::get_if<Dense>(&layer)) {
        if (d->weight.rank() != 2) throw ShapeError("dense weight must be rank 2");
        if (d->bias.rank() != 1 || d->bias.dim(0) != d->out_dim()) {
            throw ShapeError("dense bias length " + std::to_string(d->bias.numel()) +
                             " does not match out dimension " + std::to_string(d->out_dim()));
        }
    } else if (const auto* c = std::get_if<Conv2D>(&layer)) {
        if (c->kernel.rank() != 4) throw ShapeError("conv2d kernel must be rank 4");
        if (c->bias.rank() != 1 || c->bias.dim(0) != c->out_ch()) {
            throw ShapeError("conv2d bias length does not match out channels");
        }
        if (c->stride == 0) throw ShapeError("conv2d stride must be positive");
    } else if (const auto* m = std::get_if<MaxPool2D>(&layer)) {
        if (m->window == 0 || m->stride == 0) throw ShapeError("maxpool window/stride must be positive");
    }
}

// Output shape for a given input shape; throws ShapeError on mismatch.
inline Shape layer_out_shape(const Layer& layer, const Shape& in) {
    if (const auto* d = std::get_if<Dense>(&layer)) {
        if (in.size() != 1 || in[0] != d->in_dim()) {
            throw ShapeError("dense expects [" + std::to_string(d->in_dim()) + "], got " + shape_str(in));
        }
        return {d->out_dim()};
    }
    if (const auto* c = std::get_if<Conv2D>(&layer)) {
        if (in.size() != 3 || in[0] != c->in_ch()) {
            throw ShapeError("conv2d expects [" + std::to_string(c->in_ch()) + "xHxW], got " + shape_str(in));
        }
        std::size_t h = in[1] + 2 * c->padding;
        std::size_t w = in[2] + 2 * c->padding;
        if (h < c->kh() || w < c->kw()) {
            throw ShapeError("conv2d kernel larger than padded input " + shape_str(in));
        }
        return {c->out_ch(), (h - c->kh()) / c->stride + 1, (w - c->kw()) / c->stride + 1};
    }
    if (const auto* m = std::get_if<MaxPool2D>(&layer)) {
        if (in.size() != 3) throw ShapeError("maxpool2d expects [CxHxW], got " + shape_str(in));
        if (in[1] < m->window || in[2] < m->window) {
            throw ShapeError("maxpool2d window larger than input " + shape_str(in));
        }
        return {in[0], (in[1] - m->window) / m->stride + 1, (in[2] - m->window) / m->stride + 1};
    }
    if (std::holds_alternative<ReLU>(layer)) return in;
    return {shape_numel(in)}; // Flatten
}

inline Tensor forward_dense(const Dense& d, const Tensor& x) {
    std::size_t out = d.out_dim(), in = d.in_dim();
    Tensor y({out});
    const double* w = d.weight.data();
    for (std::size_t o = 0; o < out; ++o) {
        double acc = d.bias[o];
        const double* row = w + o * in;
        for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
    return y;
}

inline Tensor forward_conv2d(const Conv2D& c, const Tensor& x) {
    Shape os = layer_out_shape(Layer{c}, x.shape());
    std::size_t oc = os[0], oh = os[1], ow = os[2];
    std::size_t ic = c.in_ch(), h = x.dim(1), w = x.dim(2);
    Tensor y(os);
    for (std::size_t o = 0; o < oc; ++o) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = c.bias[o];
                for (std::size_t i = 0; i < ic; ++i) {
                    for (std::size_t ky = 0; ky < c.kh(); ++ky) {
                        std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * c.stride + ky) -
                                            static_cast<std::ptrdiff_t>(c.padding);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kx = 0; kx < c.kw(); ++kx) {
                            std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * c.stride + kx) -
                                                static_cast<std::ptrdiff_t>(c.padding);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                            acc += x.at3(i, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) *
                                   c.kernel[((o * ic + i) * c.kh() + ky) * c.kw() + kx];
                        }
                    }
                }
                y.at3(o, oy, ox) = acc;
            }
        }
    }
    return y;
}

inline Tensor forward_maxpool(const MaxPool2D& m, const Tensor& x) {
    Shape os = layer_out_shape(Layer{m}, x.shape());
    Tensor y(os);
    for (std::size_t c = 0; c < os[0]; ++c) {
        for (std::size_t oy = 0; oy < os[1]; ++oy) {
            for (std::size_t ox = 0; ox < os[2]; ++ox) {
                double best = x.at3(c, oy * m.stride, ox * m.stride);
                for (std::size_t ky = 0; ky < m.window; ++ky) {
                    for (std::size_t kx = 0; kx < m.window; ++kx) {
                        best = std::max(best, x.at3(c, oy * m.stride + ky, ox * m.stride + kx));
                    }
                }
                y.at3(c, oy, ox) = best;
            }
        }
    }
    return y;
}

inline Tensor forward_layer(const Layer& layer, const Tensor& x) {
    if (const auto* d = std::get_if<Dense>(&layer)) {
        layer_out_shape(layer, x.shape()); // shape check
        return forward_dense(*d, x);
    }
    if (const auto* c = std::get_if<Conv2D>(&layer)) return forward_conv2d(*c, x);
    if (const auto* m = std::get_if<MaxPool2D>(&layer)) return forward_maxpool(*m, x);
    if (std::holds_alternative<ReLU>(layer)) {
        Tensor y = x;
        for (double& v : y.vec()) v = std::max(0.0, v);
        return y;
    }
    return x.reshaped({x.numel()}); // Flatten
}

} // namespace npp
