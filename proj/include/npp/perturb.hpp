#pragma once

#include <cmath>
#include <future>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "npp/analysis.hpp"
#include "npp/dataset.hpp"
#include "npp/model.hpp"

namespace npp {

enum class PerturbMode { Zero, GaussianNoise, LaplacianNoise };

inline std::string perturb_mode_name(PerturbMode m) {
    switch (m) {
        case PerturbMode::Zero: return "zero";
        case PerturbMode::GaussianNoise: return "gauss";
        case PerturbMode::LaplacianNoise: return "laplace";
    }
    return "?";
}

inline PerturbMode parse_perturb_mode(const std::string& s) {
    if (s == "zero") return PerturbMode::Zero;
    if (s == "gauss" || s == "gaussian") return PerturbMode::GaussianNoise;
    if (s == "laplace" || s == "laplacian") return PerturbMode::LaplacianNoise;
    throw ConfigError("unknown perturbation mode '" + s + "'");
}

// Dropout-style mask over a dense layer's weight matrix: zero rows at the
// selected positions, ones elsewhere. Noise modes scale sigma / b by the
// empirical std of the target layer's weights.
struct PerturbationMask {
    std::size_t layer_index = 0;
    PerturbMode mode = PerturbMode::Zero;
    double noise_factor = 1.0;
    std::vector<std::size_t> positions;
    Tensor mask; // {out, in}, binary
};

inline PerturbationMask build_mask(const Model& model, std::size_t layer_index,
                                   const std::vector<std::size_t>& positions, PerturbMode mode,
                                   double noise_factor = 1.0) {
    if (layer_index >= model.layers.size()) {
        throw ConfigError("layer index " + std::to_string(layer_index) + " out of range");
    }
    const auto* dense = std::get_if<Dense>(&model.layers[layer_index]);
    if (!dense) {
        throw ConfigError("layer " + std::to_string(layer_index) + " is " +
                          layer_kind_name(model.layers[layer_index]) + ", masking needs a dense layer");
    }
    if (!(noise_factor > 0.0) && mode != PerturbMode::Zero) {
        throw ConfigError("noise factor must be > 0");
    }
    std::set<std::size_t> seen;
    for (std::size_t p : positions) {
        if (p >= dense->out_dim()) {
            throw ConfigError("neuron position " + std::to_string(p) + " out of range [0, " +
                              std::to_string(dense->out_dim()) + ")");
        }
        if (!seen.insert(p).second) {
            throw ConfigError("duplicate neuron position " + std::to_string(p));
        }
    }
    PerturbationMask mask;
    mask.layer_index = layer_index;
    mask.mode = mode;
    mask.noise_factor = noise_factor;
    mask.positions = positions;
    mask.mask = Tensor(dense->weight.shape(), 1.0);
    for (std::size_t p : positions) {
        for (std::size_t i = 0; i < dense->in_dim(); ++i) mask.mask.at2(p, i) = 0.0;
    }
    return mask;
}

namespace detail {

inline double weight_std(const Tensor& w) {
    double mean = w.sum() / static_cast<double>(w.numel());
    double var = 0.0;
    for (double v : w.vec()) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(w.numel()));
}

} // namespace detail

// Zero mode zeroes the masked neurons' incoming weights and biases, so the
// cut path cannot leak a constant activation. Noise modes add seeded noise to
// the listed rows; everything else is bit-identical to the input model.
inline Model apply_mask(const Model& model, const PerturbationMask& mask) {
    if (mask.layer_index >= model.layers.size()) {
        throw ConfigError("mask layer index out of range");
    }
    const auto* dense = std::get_if<Dense>(&model.layers[mask.layer_index]);
    if (!dense) throw ConfigError("mask target is not a dense layer");
    if (mask.mask.shape() != dense->weight.shape()) {
        throw ShapeError("mask shape " + shape_str(mask.mask.shape()) + " does not match weights " +
                         shape_str(dense->weight.shape()));
    }
    Model out = model;
    auto& target = std::get<Dense>(out.layers[mask.layer_index]);
    if (mask.mode == PerturbMode::Zero) {
        for (std::size_t p : mask.positions) {
            for (std::size_t i = 0; i < target.in_dim(); ++i) target.weight.at2(p, i) = 0.0;
            target.bias[p] = 0.0;
        }
    } else {
        double sd = detail::weight_std(dense->weight) * mask.noise_factor;
        Rng rng(derive_seed(model.meta.seed, "perturb-noise"));
        for (std::size_t p : mask.positions) {
            for (std::size_t i = 0; i < target.in_dim(); ++i) {
                double noise = mask.mode == PerturbMode::GaussianNoise ? rng.gaussian(0.0, sd)
                                                                       : rng.laplace(sd);
                target.weight.at2(p, i) += noise;
            }
        }
    }
    return out;
}

// Index of the last dense layer before the output layer; the default
// perturbation target.
inline std::size_t default_target_layer(const Model& model) {
    for (std::size_t i = model.layers.size() - 1; i-- > 0;) {
        if (layer_kind(model.layers[i]) == LayerKind::Dense) return i;
    }
    throw ConfigError("model has no dense layer before the output layer");
}

struct UnlearnOutcome {
    Model model;
    NeuronSet neuron_set;
    PerturbationMask mask;
    bool capped = false;
};

// Full pipeline: per-probe relevance, top-k lists, occurrence frequencies,
// neuron set, target selection, mask, apply. The probe set must be labeled
// with the unlearning class and disjoint from the training fingerprint —
// the zero-shot contract is enforced before anything else runs.
inline UnlearnOutcome unlearn(const Model& model, const LabeledDataset& probe_set,
                              const PropagationRule& rule, std::size_t layer_index, std::size_t k,
                              double m_p, PerturbMode mode, double noise_factor = 1.0,
                              std::size_t jobs = 0) {
    if (probe_set.empty()) throw ConfigError("probe set is empty");
    int target_class = probe_set.samples.front().label;
    for (const auto& s : probe_set.samples) {
        if (s.label != target_class) {
            throw ConfigError("probe set must be uniformly labeled with the unlearning class");
        }
        if (model.meta.fingerprint.count(s.hash)) {
            throw ZeroShotError(
                "zero-shot violation: probe sample appears in the model's training fingerprint");
        }
    }
    const auto* dense = std::get_if<Dense>(&model.layers.at(layer_index));
    if (!dense) {
        throw ConfigError("layer " + std::to_string(layer_index) + " is not a dense layer");
    }

    std::size_t n = probe_set.size();
    std::vector<RankedNeuronList> lists(n);
    if (jobs == 0) jobs = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    jobs = std::min(jobs, n);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            auto stack = propagate_full(model, probe_set.samples[i].input, rule, target_class);
            lists[i] = top_k_for_sample(stack, layer_index, k);
        }
    } else {
        std::vector<std::future<void>> futures;
        for (std::size_t j = 0; j < jobs; ++j) {
            futures.push_back(std::async(std::launch::async, [&, j] {
                for (std::size_t i = j; i < n; i += jobs) {
                    auto stack =
                        propagate_full(model, probe_set.samples[i].input, rule, target_class);
                    lists[i] = top_k_for_sample(stack, layer_index, k);
                }
            }));
        }
        for (auto& f : futures) f.get();
    }

    UnlearnOutcome outcome;
    outcome.neuron_set = build_neuron_set(accumulate_frequency(lists, dense->out_dim()));
    TargetSelection sel = select_targets(outcome.neuron_set, m_p);
    outcome.capped = sel.capped;
    outcome.mask = build_mask(model, layer_index, sel.positions, mode, noise_factor);
    outcome.model = apply_mask(model, outcome.mask);
    return outcome;
}

inline nlohmann::json mask_to_json(const PerturbationMask& mask) {
    return nlohmann::json{{"layer_index", mask.layer_index},
                          {"mode", perturb_mode_name(mask.mode)},
                          {"noise_factor", mask.noise_factor},
                          {"positions", mask.positions}};
}

} // namespace npp
