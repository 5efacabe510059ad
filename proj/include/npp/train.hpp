#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "npp/dataset.hpp"
#include "npp/model.hpp"

namespace npp {

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 1;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
};

inline void validate_config(const TrainConfig& c) {
    if (!(c.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    if (c.batch_size < 1) throw ConfigError("batch size must be >= 1");
}

inline Tensor softmax(const Tensor& logits) {
    Tensor p = logits;
    double mx = p[0];
    for (double v : p.vec()) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : p.vec()) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : p.vec()) v /= sum;
    return p;
}

// Cross-entropy of softmax(logits) against the label; also returns dL/dlogits.
inline std::pair<double, Tensor> softmax_cross_entropy(const Tensor& logits, int label) {
    Tensor p = softmax(logits);
    double loss = -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300));
    Tensor grad = p;
    grad[static_cast<std::size_t>(label)] -= 1.0;
    return {loss, grad};
}

// Parameter gradients, one entry per layer (empty tensors for parameterless
// layers). Same shapes as the layer's weight/bias.
struct LayerGrad {
    Tensor d_weight;
    Tensor d_bias;
};

namespace detail {

inline Tensor backward_dense(const Dense& d, const Tensor& x, const Tensor& dy, LayerGrad& g) {
    std::size_t out = d.out_dim(), in = d.in_dim();
    Tensor dx({in});
    for (std::size_t o = 0; o < out; ++o) {
        double go = dy[o];
        g.d_bias[o] += go;
        const double* row = d.weight.data() + o * in;
        double* grow = g.d_weight.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) {
            grow[i] += go * x[i];
            dx[i] += go * row[i];
        }
    }
    return dx;
}

inline Tensor backward_conv2d(const Conv2D& c, const Tensor& x, const Tensor& dy, LayerGrad& g) {
    std::size_t oc = dy.dim(0), oh = dy.dim(1), ow = dy.dim(2);
    std::size_t ic = c.in_ch(), h = x.dim(1), w = x.dim(2);
    Tensor dx(x.shape());
    for (std::size_t o = 0; o < oc; ++o) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double go = dy.at3(o, oy, ox);
                g.d_bias[o] += go;
                for (std::size_t i = 0; i < ic; ++i) {
                    for (std::size_t ky = 0; ky < c.kh(); ++ky) {
                        std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * c.stride + ky) -
                                            static_cast<std::ptrdiff_t>(c.padding);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kx = 0; kx < c.kw(); ++kx) {
                            std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * c.stride + kx) -
                                                static_cast<std::ptrdiff_t>(c.padding);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                            std::size_t ki = ((o * ic + i) * c.kh() + ky) * c.kw() + kx;
                            g.d_weight[ki] += go * x.at3(i, std::size_t(iy), std::size_t(ix));
                            dx.at3(i, std::size_t(iy), std::size_t(ix)) += go * c.kernel[ki];
                        }
                    }
                }
            }
        }
    }
    return dx;
}

inline Tensor backward_maxpool(const MaxPool2D& m, const Tensor& x, const Tensor& dy) {
    Tensor dx(x.shape());
    for (std::size_t c = 0; c < dy.dim(0); ++c) {
        for (std::size_t oy = 0; oy < dy.dim(1); ++oy) {
            for (std::size_t ox = 0; ox < dy.dim(2); ++ox) {
                // first max in scan order wins, matching the forward pass
                std::size_t by = oy * m.stride, bx = ox * m.stride;
                double best = x.at3(c, by, bx);
                for (std::size_t ky = 0; ky < m.window; ++ky) {
                    for (std::size_t kx = 0; kx < m.window; ++kx) {
                        double v = x.at3(c, oy * m.stride + ky, ox * m.stride + kx);
                        if (v > best) {
                            best = v;
                            by = oy * m.stride + ky;
                            bx = ox * m.stride + kx;
                        }
                    }
                }
                dx.at3(c, by, bx) += dy.at3(c, oy, ox);
            }
        }
    }
    return dx;
}

} // namespace detail

inline std::vector<LayerGrad> make_zero_grads(const Model& m) {
    std::vector<LayerGrad> grads(m.layers.size());
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        if (const auto* d = std::get_if<Dense>(&m.layers[i])) {
            grads[i] = {Tensor(d->weight.shape()), Tensor(d->bias.shape())};
        } else if (const auto* c = std::get_if<Conv2D>(&m.layers[i])) {
            grads[i] = {Tensor(c->kernel.shape()), Tensor(c->bias.shape())};
        }
    }
    return grads;
}

// Accumulates dL/dparam for one sample into `grads`; returns the sample loss.
inline double accumulate_gradients(const Model& m, const Sample& s, std::vector<LayerGrad>& grads) {
    auto [logits, trace] = forward_with_trace(m, s.input);
    auto [loss, dcur] = softmax_cross_entropy(logits, s.label);
    for (std::size_t ri = m.layers.size(); ri-- > 0;) {
        const Layer& layer = m.layers[ri];
        const auto& entry = trace.entries[ri];
        if (const auto* d = std::get_if<Dense>(&layer)) {
            dcur = detail::backward_dense(*d, entry.input, dcur, grads[ri]);
        } else if (const auto* c = std::get_if<Conv2D>(&layer)) {
            dcur = detail::backward_conv2d(*c, entry.input, dcur, grads[ri]);
        } else if (const auto* mp = std::get_if<MaxPool2D>(&layer)) {
            dcur = detail::backward_maxpool(*mp, entry.input, dcur);
        } else if (std::holds_alternative<ReLU>(layer)) {
            Tensor dx = dcur;
            for (std::size_t i = 0; i < dx.numel(); ++i) {
                if (entry.input[i] <= 0.0) dx[i] = 0.0;
            }
            dcur = std::move(dx);
        } else {
            dcur = dcur.reshaped(entry.input.shape());
        }
    }
    return loss;
}

// Mean loss and mean gradients over a batch; the analytic side of the
// finite-difference check.
inline std::pair<double, std::vector<LayerGrad>> compute_gradients(
    const Model& m, const std::vector<Sample>& batch) {
    auto grads = make_zero_grads(m);
    double loss = 0.0;
    for (const auto& s : batch) loss += accumulate_gradients(m, s, grads);
    double inv = 1.0 / static_cast<double>(batch.size());
    loss *= inv;
    for (auto& g : grads) {
        for (double& v : g.d_weight.vec()) v *= inv;
        for (double& v : g.d_bias.vec()) v *= inv;
    }
    return {loss, grads};
}

// Plain mini-batch SGD, single-threaded and deterministic for a given seed.
// Returns a new model; with epochs > 0 the training set's content hashes are
// recorded into the model fingerprint.
inline Model train(const Model& model, const LabeledDataset& dataset, const TrainConfig& config,
                   const std::function<void(std::size_t, double)>& on_epoch = {}) {
    validate_config(config);
    if (dataset.empty()) throw ConfigError("training dataset is empty");
    for (const auto& s : dataset.samples) {
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= model.class_count) {
            throw ConfigError("label " + std::to_string(s.label) + " out of range [0, " +
                              std::to_string(model.class_count) + ")");
        }
    }
    Model out = model;
    if (config.epochs == 0) return out;

    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(derive_seed(config.seed, "epoch-" + std::to_string(epoch)));
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            std::size_t end = std::min(pos + config.batch_size, order.size());
            auto grads = make_zero_grads(out);
            double batch_loss = 0.0;
            for (std::size_t i = pos; i < end; ++i) {
                batch_loss += accumulate_gradients(out, dataset.samples[order[i]], grads);
            }
            double scale = config.learning_rate / static_cast<double>(end - pos);
            for (std::size_t li = 0; li < out.layers.size(); ++li) {
                if (auto* d = std::get_if<Dense>(&out.layers[li])) {
                    for (std::size_t j = 0; j < d->weight.numel(); ++j) {
                        d->weight[j] -= scale * grads[li].d_weight[j];
                    }
                    for (std::size_t j = 0; j < d->bias.numel(); ++j) {
                        d->bias[j] -= scale * grads[li].d_bias[j];
                    }
                } else if (auto* c = std::get_if<Conv2D>(&out.layers[li])) {
                    for (std::size_t j = 0; j < c->kernel.numel(); ++j) {
                        c->kernel[j] -= scale * grads[li].d_weight[j];
                    }
                    for (std::size_t j = 0; j < c->bias.numel(); ++j) {
                        c->bias[j] -= scale * grads[li].d_bias[j];
                    }
                }
            }
            if (!std::isfinite(batch_loss)) throw Error("training diverged: non-finite loss");
            epoch_loss += batch_loss;
            pos = end;
        }
        if (on_epoch) on_epoch(epoch, epoch_loss / static_cast<double>(dataset.size()));
    }
    for (const auto& s : dataset.samples) out.meta.fingerprint.insert(s.hash);
    return out;
}

} // namespace npp
