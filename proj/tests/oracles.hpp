#pragma once

// Test-only reference implementations, deliberately independent of the
// library's compute paths: explicit per-pair loops over plain nested
// vectors. Anything the main code vectorizes or fuses is spelled out
// elementwise here.

#include <cmath>
#include <vector>

#include "npp/lrp.hpp"
#include "npp/model.hpp"
#include "npp/rng.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

struct DenseRef {
    Mat w; // [out][in]
    Vec b;
    bool relu_after = false;
};

// A dense/ReLU stack extracted into plain vectors.
struct NetRef {
    std::vector<DenseRef> layers;
    Vec input;
};

inline NetRef extract_dense_net(const npp::Model& m, const npp::Tensor& input) {
    NetRef net;
    net.input.assign(input.data(), input.data() + input.numel());
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        if (const auto* d = std::get_if<npp::Dense>(&m.layers[i])) {
            DenseRef ref;
            ref.w.assign(d->out_dim(), Vec(d->in_dim()));
            ref.b.assign(d->out_dim(), 0.0);
            for (std::size_t o = 0; o < d->out_dim(); ++o) {
                for (std::size_t k = 0; k < d->in_dim(); ++k) ref.w[o][k] = d->weight.at2(o, k);
                ref.b[o] = d->bias[o];
            }
            if (i + 1 < m.layers.size() &&
                npp::layer_kind(m.layers[i + 1]) == npp::LayerKind::ReLU) {
                ref.relu_after = true;
            }
            net.layers.push_back(std::move(ref));
        }
    }
    return net;
}

// Naive forward: per-layer activations, activations[0] is the input and
// activations[i+1] the (post-ReLU) output of dense layer i.
inline std::vector<Vec> naive_forward(const NetRef& net) {
    std::vector<Vec> acts{net.input};
    for (const auto& layer : net.layers) {
        const Vec& x = acts.back();
        Vec y(layer.w.size(), 0.0);
        for (std::size_t o = 0; o < layer.w.size(); ++o) {
            double acc = layer.b[o];
            for (std::size_t k = 0; k < layer.w[o].size(); ++k) acc += layer.w[o][k] * x[k];
            y[o] = layer.relu_after ? std::max(0.0, acc) : acc;
        }
        acts.push_back(std::move(y));
    }
    return acts;
}

struct RuleRef {
    enum { Epsilon, GammaEpsilon, AlphaBeta } kind = Epsilon;
    double eps = 1e-6, gamma = 0.0, alpha = 1.0, beta = 0.0;
};

inline RuleRef to_ref(const npp::PropagationRule& r) {
    RuleRef out;
    if (r.kind == npp::PropagationRule::Kind::Epsilon) {
        out.kind = RuleRef::Epsilon;
    } else if (r.kind == npp::PropagationRule::Kind::GammaEpsilon) {
        out.kind = RuleRef::GammaEpsilon;
    } else {
        out.kind = RuleRef::AlphaBeta;
    }
    out.eps = r.epsilon;
    out.gamma = r.gamma;
    out.alpha = r.alpha;
    out.beta = r.beta;
    return out;
}

// One naive backward step across a dense layer: build the full z matrix,
// then redistribute pairwise.
inline Vec naive_propagate_step(const DenseRef& layer, const Vec& acts, const Vec& upstream,
                                const RuleRef& rule) {
    std::size_t out = layer.w.size(), in = acts.size();
    Mat z(in, Vec(out, 0.0));
    for (std::size_t j = 0; j < out; ++j) {
        for (std::size_t k = 0; k < in; ++k) {
            double w = layer.w[j][k];
            if (rule.kind == RuleRef::GammaEpsilon && w > 0.0) w = w + rule.gamma * w;
            z[k][j] = acts[k] * w;
        }
    }
    Vec rel(in, 0.0);
    for (std::size_t j = 0; j < out; ++j) {
        if (rule.kind == RuleRef::AlphaBeta) {
            double sum_pos = 0.0, sum_neg = 0.0;
            for (std::size_t k = 0; k < in; ++k) {
                if (z[k][j] > 0.0) sum_pos += z[k][j];
                if (z[k][j] < 0.0) sum_neg += -z[k][j];
            }
            for (std::size_t k = 0; k < in; ++k) {
                double term = 0.0;
                if (z[k][j] > 0.0 && sum_pos > 0.0) term += rule.alpha * z[k][j] / sum_pos;
                if (z[k][j] < 0.0 && sum_neg > 0.0) term -= rule.beta * (-z[k][j]) / sum_neg;
                rel[k] += term * upstream[j];
            }
        } else {
            double total = 0.0;
            for (std::size_t k = 0; k < in; ++k) total += z[k][j];
            if (total == 0.0) continue;
            double denom = total + (total > 0.0 ? rule.eps : -rule.eps);
            for (std::size_t k = 0; k < in; ++k) rel[k] += z[k][j] / denom * upstream[j];
        }
    }
    return rel;
}

// Full naive LRP over a dense/ReLU stack: seed the target logit, walk back.
// Returns relevance per activation level (index 0 = input level).
inline std::vector<Vec> naive_lrp(const NetRef& net, const RuleRef& rule, int target) {
    auto acts = naive_forward(net);
    const Vec& logits = acts.back();
    Vec seed(logits.size(), 0.0);
    seed[static_cast<std::size_t>(target)] = logits[static_cast<std::size_t>(target)];
    std::vector<Vec> rel(acts.size());
    rel.back() = seed;
    for (std::size_t i = net.layers.size(); i-- > 0;) {
        rel[i] = naive_propagate_step(net.layers[i], acts[i], rel[i + 1], rule);
    }
    return rel;
}

// Random dense/ReLU classifier for oracle comparisons.
inline npp::Model random_dense_model(npp::Rng& rng, std::size_t min_width = 2,
                                     std::size_t max_width = 32, std::size_t max_hidden = 2,
                                     bool relu = true) {
    std::size_t hidden_layers = rng.uniform_index(max_hidden + 1);
    std::size_t in_dim = min_width + rng.uniform_index(max_width - min_width + 1);
    std::size_t classes = 2 + rng.uniform_index(7);
    npp::Model m;
    m.input_shape = {in_dim};
    m.class_count = classes;
    m.meta.seed = rng.bits();
    std::size_t cur = in_dim;
    for (std::size_t i = 0; i < hidden_layers; ++i) {
        std::size_t width = min_width + rng.uniform_index(max_width - min_width + 1);
        npp::Dense d{npp::Tensor({width, cur}), npp::Tensor({width})};
        for (double& v : d.weight.vec()) v = rng.uniform(-1.0, 1.0);
        for (double& v : d.bias.vec()) v = rng.uniform(-0.3, 0.3);
        m.layers.push_back(std::move(d));
        if (relu) m.layers.push_back(npp::ReLU{});
        cur = width;
    }
    npp::Dense out{npp::Tensor({classes, cur}), npp::Tensor({classes})};
    for (double& v : out.weight.vec()) v = rng.uniform(-1.0, 1.0);
    for (double& v : out.bias.vec()) v = rng.uniform(-0.3, 0.3);
    m.layers.push_back(std::move(out));
    return m;
}

inline npp::Tensor random_input(npp::Rng& rng, const npp::Shape& shape, double lo = -1.0,
                                double hi = 1.0) {
    npp::Tensor t(shape);
    for (double& v : t.vec()) v = rng.uniform(lo, hi);
    return t;
}

// True when, under this input, every dense output neuron sees both positive
// and negative contributions. Alpha-beta conservation is exact only on such
// nets; the conservation suite regenerates until this holds.
inline bool has_both_sign_contributions(const npp::Model& m, const npp::Tensor& input) {
    auto [logits, trace] = npp::forward_with_trace(m, input);
    (void)logits;
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
        const auto* d = std::get_if<npp::Dense>(&m.layers[li]);
        if (!d) continue;
        const npp::Tensor& x = trace.entries[li].input;
        for (std::size_t j = 0; j < d->out_dim(); ++j) {
            bool pos = false, neg = false;
            for (std::size_t k = 0; k < d->in_dim(); ++k) {
                double z = x[k] * d->weight.at2(j, k);
                if (z > 0.0) pos = true;
                if (z < 0.0) neg = true;
            }
            if (!pos || !neg) return false;
        }
    }
    return true;
}

} // namespace oracle
