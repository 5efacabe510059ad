#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "npp/layer.hpp"
#include "npp/rng.hpp"
#include "npp/tensor.hpp"

namespace npp {

struct ModelMeta {
    std::string name;
    std::uint64_t seed = 0;
    // Content hashes of every sample the model was trained on. The zero-shot
    // probe check is enforced against this set.
    std::set<std::uint64_t> fingerprint;
};

// Immutable-by-convention model value: construct, validate, never mutate in
// place. Forward passes over a shared model are safe to run concurrently;
// training and masking produce new models.
struct Model {
    std::vector<Layer> layers;
    std::size_t class_count = 0;
    Shape input_shape;
    ModelMeta meta;
};

// Per-layer input/output tensors captured during one forward pass. Entry i
// corresponds to layers[i].
struct ActivationTrace {
    struct Entry {
        Tensor input;
        Tensor output;
    };
    std::vector<Entry> entries;
};

inline void validate_model(const Model& m) {
    if (m.layers.empty()) throw ShapeError("model has no layers");
    if (m.class_count == 0) throw ShapeError("model class_count must be positive");
    Shape s = m.input_shape;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        validate_layer(m.layers[i]);
        try {
            s = layer_out_shape(m.layers[i], s);
        } catch (const ShapeError& e) {
            throw ShapeError("layer " + std::to_string(i) + " (" + layer_kind_name(m.layers[i]) +
                             "): " + e.what());
        }
    }
    if (s != Shape{m.class_count}) {
        throw ShapeError("final layer produces " + shape_str(s) + ", expected [" +
                         std::to_string(m.class_count) + "] logits");
    }
    bool dense_before_output = false;
    for (std::size_t i = 0; i + 1 < m.layers.size(); ++i) {
        if (layer_kind(m.layers[i]) == LayerKind::Dense) dense_before_output = true;
    }
    if (!dense_before_output) {
        throw ShapeError("model needs at least one dense layer before the output layer");
    }
}

namespace detail {

inline Tensor forward_impl(const Model& m, const Tensor& input, ActivationTrace* trace) {
    if (input.shape() != m.input_shape) {
        throw ShapeError("layer 0 (" + layer_kind_name(m.layers.at(0)) + "): expected input " +
                         shape_str(m.input_shape) + ", got " + shape_str(input.shape()));
    }
    Tensor cur = input;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        Tensor next;
        try {
            next = forward_layer(m.layers[i], cur);
        } catch (const ShapeError& e) {
            throw ShapeError("layer " + std::to_string(i) + " (" + layer_kind_name(m.layers[i]) +
                             "): " + e.what());
        }
        if (trace) trace->entries.push_back({cur, next});
        cur = std::move(next);
    }
    require_finite(cur, "forward logits");
    return cur;
}

} // namespace detail

inline Tensor forward(const Model& m, const Tensor& input) {
    return detail::forward_impl(m, input, nullptr);
}

inline std::pair<Tensor, ActivationTrace> forward_with_trace(const Model& m, const Tensor& input) {
    ActivationTrace trace;
    trace.entries.reserve(m.layers.size());
    Tensor logits = detail::forward_impl(m, input, &trace);
    return {std::move(logits), std::move(trace)};
}

inline std::size_t argmax(const Tensor& t) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < t.numel(); ++i) {
        if (t[i] > t[best]) best = i;
    }
    return best;
}

// He-style uniform init: limit = sqrt(6 / fan_in).
inline Dense make_dense(Rng& rng, std::size_t in, std::size_t out) {
    double limit = std::sqrt(6.0 / static_cast<double>(in));
    Dense d{Tensor({out, in}), Tensor({out})};
    for (double& v : d.weight.vec()) v = rng.uniform(-limit, limit);
    return d;
}

inline Conv2D make_conv2d(Rng& rng, std::size_t in_ch, std::size_t out_ch, std::size_t k,
                          std::size_t stride = 1, std::size_t padding = 0) {
    double limit = std::sqrt(6.0 / static_cast<double>(in_ch * k * k));
    Conv2D c{Tensor({out_ch, in_ch, k, k}), Tensor({out_ch}), stride, padding};
    for (double& v : c.kernel.vec()) v = rng.uniform(-limit, limit);
    return c;
}

// Flatten -> Dense(hidden) -> ReLU -> Dense(classes); the classic flat
// classifier over image input.
inline Model make_mlp(const Shape& input_shape, std::size_t hidden, std::size_t classes,
                      std::uint64_t seed) {
    Rng rng(derive_seed(seed, "init"));
    Model m;
    m.input_shape = input_shape;
    m.class_count = classes;
    m.meta.seed = seed;
    std::size_t in = shape_numel(input_shape);
    m.layers.push_back(Flatten{});
    m.layers.push_back(make_dense(rng, in, hidden));
    m.layers.push_back(ReLU{});
    m.layers.push_back(make_dense(rng, hidden, classes));
    validate_model(m);
    return m;
}

// Small conv stack ending in an FC layer before the output, sized for
// 28x28 single-channel input.
inline Model make_allcnn(const Shape& input_shape, std::size_t hidden, std::size_t classes,
                         std::uint64_t seed) {
    Rng rng(derive_seed(seed, "init"));
    Model m;
    m.input_shape = input_shape;
    m.class_count = classes;
    m.meta.seed = seed;
    m.layers.push_back(make_conv2d(rng, input_shape[0], 8, 3, 1, 1));
    m.layers.push_back(ReLU{});
    m.layers.push_back(MaxPool2D{2, 2});
    m.layers.push_back(make_conv2d(rng, 8, 16, 3, 1, 1));
    m.layers.push_back(ReLU{});
    m.layers.push_back(MaxPool2D{2, 2});
    m.layers.push_back(Flatten{});
    Shape s = input_shape;
    for (const auto& l : m.layers) s = layer_out_shape(l, s);
    m.layers.push_back(make_dense(rng, s[0], hidden));
    m.layers.push_back(ReLU{});
    m.layers.push_back(make_dense(rng, hidden, classes));
    validate_model(m);
    return m;
}

inline bool models_same_bits(const Model& a, const Model& b) {
    if (a.layers.size() != b.layers.size() || a.class_count != b.class_count ||
        a.input_shape != b.input_shape) {
        return false;
    }
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        if (a.layers[i].index() != b.layers[i].index()) return false;
        if (const auto* da = std::get_if<Dense>(&a.layers[i])) {
            const auto* db = std::get_if<Dense>(&b.layers[i]);
            if (!da->weight.same_bits(db->weight) || !da->bias.same_bits(db->bias)) return false;
        } else if (const auto* ca = std::get_if<Conv2D>(&a.layers[i])) {
            const auto* cb = std::get_if<Conv2D>(&b.layers[i]);
            if (!ca->kernel.same_bits(cb->kernel) || !ca->bias.same_bits(cb->bias) ||
                ca->stride != cb->stride || ca->padding != cb->padding) {
                return false;
            }
        } else if (const auto* ma = std::get_if<MaxPool2D>(&a.layers[i])) {
            const auto* mb = std::get_if<MaxPool2D>(&b.layers[i]);
            if (ma->window != mb->window || ma->stride != mb->stride) return false;
        }
    }
    return true;
}

} // namespace npp
