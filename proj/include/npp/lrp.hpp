#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "npp/model.hpp"

namespace npp {

// Relevance redistribution rules. Contributions are z_kj = a_k * w_kj.
//
//   Epsilon:       R_k = sum_j z_kj / (sum_k' z_k'j + eps * sign(sum)) * R_j
//   GammaEpsilon:  Epsilon with w replaced by w + gamma * max(w, 0)
//   AlphaBeta:     R_k = sum_j (alpha * z+_kj / sum z+ - beta * z-_kj / sum z-) * R_j
//                  with alpha - beta = 1 and the convention 0/0 = 0.
//
// A downstream neuron whose total contribution is exactly zero redistributes
// nothing: no NaN can leave this module.
struct PropagationRule {
    enum class Kind { Epsilon, GammaEpsilon, AlphaBeta };

    Kind kind = Kind::Epsilon;
    double epsilon = 1e-6;
    double gamma = 0.0;
    double alpha = 1.0;
    double beta = 0.0;

    static PropagationRule make_epsilon(double eps = 1e-6) {
        if (!(eps > 0.0)) throw ConfigError("epsilon must be > 0");
        PropagationRule r;
        r.kind = Kind::Epsilon;
        r.epsilon = eps;
        return r;
    }

    static PropagationRule make_gamma_epsilon(double gamma, double eps = 1e-6) {
        if (!(eps > 0.0)) throw ConfigError("epsilon must be > 0");
        if (gamma < 0.0) throw ConfigError("gamma must be >= 0");
        PropagationRule r;
        r.kind = Kind::GammaEpsilon;
        r.gamma = gamma;
        r.epsilon = eps;
        return r;
    }

    static PropagationRule make_alpha_beta(double alpha, double beta) {
        if (std::fabs(alpha - beta - 1.0) > 1e-12) {
            throw ConfigError("alpha - beta must equal 1");
        }
        PropagationRule r;
        r.kind = Kind::AlphaBeta;
        r.alpha = alpha;
        r.beta = beta;
        return r;
    }

    std::string name() const {
        switch (kind) {
            case Kind::Epsilon: return "epsilon";
            case Kind::GammaEpsilon: return "gamma+epsilon";
            case Kind::AlphaBeta: {
                auto n = [](double v) {
                    long r = std::lround(v);
                    return std::fabs(v - static_cast<double>(r)) < 1e-9 ? std::to_string(r)
                                                                        : std::to_string(v);
                };
                return "alpha" + n(alpha) + "beta" + n(beta);
            }
        }
        return "?";
    }
};

// Parse a rule token as used by the CLI and sweep tables:
// epsilon | gamma+epsilon | alpha1beta0 | alpha2beta1.
inline PropagationRule parse_rule(const std::string& name, double eps = 1e-6,
                                  double gamma = 0.25) {
    if (name == "epsilon") return PropagationRule::make_epsilon(eps);
    if (name == "gamma+epsilon" || name == "gamma_epsilon") {
        return PropagationRule::make_gamma_epsilon(gamma, eps);
    }
    if (name == "alpha1beta0") return PropagationRule::make_alpha_beta(1.0, 0.0);
    if (name == "alpha2beta1") return PropagationRule::make_alpha_beta(2.0, 1.0);
    throw ConfigError("unknown propagation rule '" + name + "'");
}

// Relevance tensors from one backward pass: one tensor per layer output,
// aligned with the activation trace, plus the model-input relevance.
// Immutable after construction.
struct RelevanceStack {
    PropagationRule rule;
    int target_class = 0;
    std::vector<Tensor> output_relevance; // output_relevance[i] ~ layers[i] output
    Tensor input_relevance;
    std::vector<LayerKind> kinds;

    std::size_t layer_count() const { return output_relevance.size(); }
};

// Relevance seed at the output layer: the target logit at its own position,
// zero everywhere else.
inline Tensor init_output_relevance(const Tensor& logits, int target_class) {
    if (target_class < 0 || static_cast<std::size_t>(target_class) >= logits.numel()) {
        throw ConfigError("target class " + std::to_string(target_class) + " out of range [0, " +
                          std::to_string(logits.numel()) + ")");
    }
    Tensor r(logits.shape());
    r[static_cast<std::size_t>(target_class)] = logits[static_cast<std::size_t>(target_class)];
    return r;
}

namespace detail {

// Shared per-output-neuron redistribution. `fan_in` enumerates the input
// positions feeding output j; `weight_of` gives w_kj.
template <class FanIn>
inline void redistribute(const PropagationRule& rule, const Tensor& acts, double upstream,
                         Tensor& out, FanIn&& fan_in) {
    if (upstream == 0.0) return;
    if (rule.kind == PropagationRule::Kind::AlphaBeta) {
        double sum_pos = 0.0, sum_neg = 0.0;
        fan_in([&](std::size_t k, double w) {
            double z = acts[k] * w;
            if (z > 0.0) {
                sum_pos += z;
            } else {
                sum_neg -= z;
            }
        });
        double fpos = sum_pos > 0.0 ? rule.alpha * upstream / sum_pos : 0.0;
        double fneg = sum_neg > 0.0 ? rule.beta * upstream / sum_neg : 0.0;
        if (fpos == 0.0 && fneg == 0.0) return;
        fan_in([&](std::size_t k, double w) {
            double z = acts[k] * w;
            if (z > 0.0) {
                out[k] += fpos * z;
            } else if (z < 0.0) {
                out[k] += fneg * z; // z negative, fneg = beta*R/sum|z-|, term = -beta*|z|/sum * R
            }
        });
        return;
    }
    const bool gamma_rule = rule.kind == PropagationRule::Kind::GammaEpsilon;
    double total = 0.0;
    fan_in([&](std::size_t k, double w) {
        if (gamma_rule && w > 0.0) w += rule.gamma * w;
        total += acts[k] * w;
    });
    if (total == 0.0) return;
    double denom = total + (total > 0.0 ? rule.epsilon : -rule.epsilon);
    double factor = upstream / denom;
    fan_in([&](std::size_t k, double w) {
        if (gamma_rule && w > 0.0) w += rule.gamma * w;
        out[k] += acts[k] * w * factor;
    });
}

} // namespace detail

// One backward step through a dense layer: relevance over its inputs.
inline Tensor propagate_dense(const Dense& layer, const Tensor& input_activations,
                              const Tensor& upstream_relevance, const PropagationRule& rule) {
    std::size_t out = layer.out_dim(), in = layer.in_dim();
    if (input_activations.numel() != in || upstream_relevance.numel() != out) {
        throw ShapeError("propagate_dense: activations " + shape_str(input_activations.shape()) +
                         " / relevance " + shape_str(upstream_relevance.shape()) +
                         " do not match dense " + std::to_string(out) + "x" + std::to_string(in));
    }
    require_finite(upstream_relevance, "upstream relevance");
    Tensor r({in});
    for (std::size_t j = 0; j < out; ++j) {
        const double* row = layer.weight.data() + j * in;
        detail::redistribute(rule, input_activations, upstream_relevance[j], r,
                             [&](auto&& visit) {
                                 for (std::size_t k = 0; k < in; ++k) visit(k, row[k]);
                             });
    }
    return r;
}

// Conv2D uses the same rule arithmetic over each output's receptive field.
inline Tensor propagate_conv2d(const Conv2D& layer, const Tensor& input_activations,
                               const Tensor& upstream_relevance, const PropagationRule& rule) {
    std::size_t ic = layer.in_ch(), h = input_activations.dim(1), w = input_activations.dim(2);
    std::size_t oc = upstream_relevance.dim(0), oh = upstream_relevance.dim(1),
                ow = upstream_relevance.dim(2);
    Tensor r(input_activations.shape());
    for (std::size_t o = 0; o < oc; ++o) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                detail::redistribute(
                    rule, input_activations, upstream_relevance.at3(o, oy, ox), r,
                    [&](auto&& visit) {
                        for (std::size_t i = 0; i < ic; ++i) {
                            for (std::size_t ky = 0; ky < layer.kh(); ++ky) {
                                std::ptrdiff_t iy =
                                    static_cast<std::ptrdiff_t>(oy * layer.stride + ky) -
                                    static_cast<std::ptrdiff_t>(layer.padding);
                                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                                for (std::size_t kx = 0; kx < layer.kw(); ++kx) {
                                    std::ptrdiff_t ix =
                                        static_cast<std::ptrdiff_t>(ox * layer.stride + kx) -
                                        static_cast<std::ptrdiff_t>(layer.padding);
                                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                                    visit((i * h + static_cast<std::size_t>(iy)) * w +
                                              static_cast<std::size_t>(ix),
                                          layer.kernel[((o * ic + i) * layer.kh() + ky) * layer.kw() +
                                                       kx]);
                                }
                            }
                        }
                    });
            }
        }
    }
    return r;
}

// MaxPool routes relevance winner-take-all to the argmax input position of
// the forward pass (first max in scan order).
inline Tensor propagate_maxpool(const MaxPool2D& layer, const Tensor& input_activations,
                                const Tensor& upstream_relevance) {
    Tensor r(input_activations.shape());
    for (std::size_t c = 0; c < upstream_relevance.dim(0); ++c) {
        for (std::size_t oy = 0; oy < upstream_relevance.dim(1); ++oy) {
            for (std::size_t ox = 0; ox < upstream_relevance.dim(2); ++ox) {
                std::size_t by = oy * layer.stride, bx = ox * layer.stride;
                double best = input_activations.at3(c, by, bx);
                for (std::size_t ky = 0; ky < layer.window; ++ky) {
                    for (std::size_t kx = 0; kx < layer.window; ++kx) {
                        double v = input_activations.at3(c, oy * layer.stride + ky,
                                                         ox * layer.stride + kx);
                        if (v > best) {
                            best = v;
                            by = oy * layer.stride + ky;
                            bx = ox * layer.stride + kx;
                        }
                    }
                }
                r.at3(c, by, bx) += upstream_relevance.at3(c, oy, ox);
            }
        }
    }
    return r;
}

// Full backward pass: forward with trace, seed the target logit, then walk
// the stack back to the input. ReLU and Flatten pass relevance through
// aligned with the forward pass.
inline RelevanceStack propagate_full(const Model& model, const Tensor& input,
                                     const PropagationRule& rule, int target_class) {
    auto [logits, trace] = forward_with_trace(model, input);
    RelevanceStack stack;
    stack.rule = rule;
    stack.target_class = target_class;
    stack.output_relevance.resize(model.layers.size());
    stack.kinds.reserve(model.layers.size());
    for (const auto& l : model.layers) stack.kinds.push_back(layer_kind(l));

    Tensor cur = init_output_relevance(logits, target_class);
    for (std::size_t ri = model.layers.size(); ri-- > 0;) {
        stack.output_relevance[ri] = cur;
        const Layer& layer = model.layers[ri];
        const Tensor& acts = trace.entries[ri].input;
        if (const auto* d = std::get_if<Dense>(&layer)) {
            cur = propagate_dense(*d, acts, cur, rule);
        } else if (const auto* c = std::get_if<Conv2D>(&layer)) {
            cur = propagate_conv2d(*c, acts, cur, rule);
        } else if (const auto* m = std::get_if<MaxPool2D>(&layer)) {
            cur = propagate_maxpool(*m, acts, cur);
        } else if (std::holds_alternative<ReLU>(layer)) {
            // identity for relevance
        } else {
            cur = cur.reshaped(acts.shape());
        }
    }
    stack.input_relevance = std::move(cur);
    require_finite(stack.input_relevance, "input relevance");
    return stack;
}

// Relevance tensor over the given layer's output neurons.
inline const Tensor& layer_relevance(const RelevanceStack& stack, std::size_t layer_index) {
    if (layer_index >= stack.output_relevance.size()) {
        throw ConfigError("layer index " + std::to_string(layer_index) + " out of range [0, " +
                          std::to_string(stack.output_relevance.size()) + ")");
    }
    return stack.output_relevance[layer_index];
}

} // namespace npp
