#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "npp/dataset.hpp"
#include "npp/train.hpp"

namespace npp {

// Accuracy on the unlearning class (A_t) and on all remaining classes (A_g),
// computed over disjoint partitions of the eval set.
struct ClassMetrics {
    double target_accuracy = 0.0; // A_t
    double global_accuracy = 0.0; // A_g
};

inline ClassMetrics class_metrics(const Model& model, const LabeledDataset& eval_set,
                                  int target_class) {
    std::size_t target_n = 0, target_ok = 0, rest_n = 0, rest_ok = 0;
    for (const auto& s : eval_set.samples) {
        bool correct = static_cast<int>(argmax(forward(model, s.input))) == s.label;
        if (s.label == target_class) {
            ++target_n;
            target_ok += correct;
        } else {
            ++rest_n;
            rest_ok += correct;
        }
    }
    if (target_n == 0 || rest_n == 0) {
        throw ConfigError("eval set must contain target-class and non-target samples");
    }
    return {static_cast<double>(target_ok) / static_cast<double>(target_n),
            static_cast<double>(rest_ok) / static_cast<double>(rest_n)};
}

// Confidence features the attack sees: true-class probability, max softmax
// probability, prediction entropy.
inline std::array<double, 3> mia_features(const Model& model, const Sample& s) {
    Tensor p = softmax(forward(model, s.input));
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= p.numel()) {
        throw ConfigError("sample label " + std::to_string(s.label) +
                          " out of range for a " + std::to_string(p.numel()) + "-class model");
    }
    double true_p = p[static_cast<std::size_t>(s.label)];
    double max_p = 0.0, entropy = 0.0;
    for (double v : p.vec()) {
        max_p = std::max(max_p, v);
        if (v > 0.0) entropy -= v * std::log(v);
    }
    return {true_p, max_p, entropy};
}

// Confidence-threshold membership attack: a logistic head over the three
// features, trained on calibration members/non-members, decision at
// posterior 0.5. The calibration data must be disjoint from whatever the
// attack later scores.
class AttackModel {
public:
    void fit(const Model& model, const LabeledDataset& members, const LabeledDataset& nonmembers,
             std::uint64_t seed = 0x4d4941) {
        if (members.empty() || nonmembers.empty()) {
            throw ConfigError("attack calibration sets must be non-empty");
        }
        std::vector<std::array<double, 3>> feats;
        std::vector<int> labels;
        for (const auto& s : members.samples) {
            feats.push_back(mia_features(model, s));
            labels.push_back(1);
        }
        for (const auto& s : nonmembers.samples) {
            feats.push_back(mia_features(model, s));
            labels.push_back(0);
        }
        for (std::size_t d = 0; d < 3; ++d) {
            double mean = 0.0;
            for (const auto& f : feats) mean += f[d];
            mean /= static_cast<double>(feats.size());
            double var = 0.0;
            for (const auto& f : feats) var += (f[d] - mean) * (f[d] - mean);
            mean_[d] = mean;
            std_[d] = std::max(std::sqrt(var / static_cast<double>(feats.size())), 1e-9);
        }

        LabeledDataset train_set;
        train_set.class_count = 2;
        for (std::size_t i = 0; i < feats.size(); ++i) {
            Tensor t({3});
            for (std::size_t d = 0; d < 3; ++d) t[d] = (feats[i][d] - mean_[d]) / std_[d];
            train_set.samples.push_back({t, labels[i], sample_hash(t, labels[i])});
        }
        // single dense + softmax = multinomial logistic regression; not
        // validated as a full model since it is never a perturbation target
        Model head;
        head.class_count = 2;
        head.input_shape = {3};
        head.meta.seed = seed;
        Rng rng(derive_seed(seed, "init"));
        head.layers.push_back(make_dense(rng, 3, 2));
        TrainConfig cfg;
        cfg.learning_rate = 0.2;
        cfg.epochs = 40;
        cfg.batch_size = 32;
        cfg.seed = seed;
        net_ = train(head, train_set, cfg);
        fitted_ = true;
    }

    bool is_member(const Model& model, const Sample& s) const {
        if (!fitted_) throw ConfigError("attack model not fitted");
        auto f = mia_features(model, s);
        Tensor t({3});
        for (std::size_t d = 0; d < 3; ++d) t[d] = (f[d] - mean_[d]) / std_[d];
        Tensor p = softmax(forward(net_, t));
        return p[1] > threshold_;
    }

    double threshold() const { return threshold_; }
    void set_threshold(double t) { threshold_ = t; }

private:
    Model net_;
    std::array<double, 3> mean_{};
    std::array<double, 3> std_{};
    double threshold_ = 0.5;
    bool fitted_ = false;
};

// Fraction of the unlearning class's training samples the attack labels
// "non-member". The calibration sets must not overlap the scored targets.
inline double forgetting_rate(const Model& model, const LabeledDataset& member_targets,
                              const LabeledDataset& calibration_members,
                              const LabeledDataset& calibration_nonmembers,
                              std::uint64_t seed = 0x4d4941) {
    if (member_targets.empty() || calibration_members.empty() || calibration_nonmembers.empty()) {
        throw ConfigError("forgetting_rate: all sample sets must be non-empty");
    }
    auto targets = member_targets.hashes();
    for (const auto& s : calibration_members.samples) {
        if (targets.count(s.hash)) throw ConfigError("calibration members overlap scored targets");
    }
    for (const auto& s : calibration_nonmembers.samples) {
        if (targets.count(s.hash)) throw ConfigError("calibration non-members overlap scored targets");
    }
    AttackModel attack;
    attack.fit(model, calibration_members, calibration_nonmembers, seed);
    std::size_t forgotten = 0;
    for (const auto& s : member_targets.samples) {
        if (!attack.is_member(model, s)) ++forgotten;
    }
    return static_cast<double>(forgotten) / static_cast<double>(member_targets.size());
}

// Monotonic wall-clock wrapper for any pipeline stage.
template <class F>
auto timed(F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    auto result = f();
    auto t1 = std::chrono::steady_clock::now();
    double seconds = std::chrono::duration<double>(t1 - t0).count();
    return std::make_pair(std::move(result), seconds);
}

struct ReportConfig {
    std::string rule = "none";
    std::size_t k = 0;
    double m_p = 0.0;
    long layer = -1;
    std::string mode = "none";
    std::uint64_t seed = 0;
};

struct UnlearnReport {
    std::string name;
    double target_accuracy = 0.0;  // A_t
    double global_accuracy = 0.0;  // A_g
    double forgetting = 0.0;       // Fr
    double elapsed_seconds = 0.0;  // T
    ReportConfig config;
};

struct MiaInputs {
    LabeledDataset member_targets;
    LabeledDataset calibration_members;
    LabeledDataset calibration_nonmembers;
};

struct NamedModel {
    std::string name;
    const Model* model = nullptr;
    ReportConfig config;
    double elapsed_seconds = 0.0; // time spent producing this model
};

inline std::vector<UnlearnReport> compare(const std::vector<NamedModel>& models,
                                          const LabeledDataset& eval_set, int target_class,
                                          const MiaInputs& mia, std::uint64_t seed = 0x4d4941) {
    if (models.empty()) throw ConfigError("compare: need at least one model");
    std::vector<UnlearnReport> reports;
    for (const auto& nm : models) {
        UnlearnReport r;
        r.name = nm.name;
        r.config = nm.config;
        r.elapsed_seconds = nm.elapsed_seconds;
        ClassMetrics cm = class_metrics(*nm.model, eval_set, target_class);
        r.target_accuracy = cm.target_accuracy;
        r.global_accuracy = cm.global_accuracy;
        r.forgetting = forgetting_rate(*nm.model, mia.member_targets, mia.calibration_members,
                                       mia.calibration_nonmembers, seed);
        reports.push_back(std::move(r));
    }
    return reports;
}

inline nlohmann::json report_config_to_json(const ReportConfig& c) {
    return nlohmann::json{{"rule", c.rule},   {"k", c.k},       {"m_p", c.m_p},
                          {"layer", c.layer}, {"mode", c.mode}, {"seed", c.seed}};
}

inline nlohmann::json reports_to_json(const std::vector<UnlearnReport>& reports) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : reports) {
        rows.push_back({{"name", r.name},
                        {"A_t", r.target_accuracy},
                        {"A_g", r.global_accuracy},
                        {"Fr", r.forgetting},
                        {"T_seconds", r.elapsed_seconds},
                        {"config", report_config_to_json(r.config)}});
    }
    return nlohmann::json{{"models", rows}};
}

// Aligned text table; rates rounded to two decimals like the usual
// comparison tables, full precision stays in the JSON.
inline std::string render_report_table(const std::vector<UnlearnReport>& reports) {
    std::ostringstream os;
    os << std::left << std::setw(24) << "model" << std::right << std::setw(8) << "A_t"
       << std::setw(8) << "A_g" << std::setw(8) << "Fr" << std::setw(12) << "T(s)" << "\n";
    for (const auto& r : reports) {
        os << std::left << std::setw(24) << r.name << std::right << std::fixed
           << std::setprecision(2) << std::setw(8) << r.target_accuracy << std::setw(8)
           << r.global_accuracy << std::setw(8) << r.forgetting << std::setprecision(3)
           << std::setw(12) << r.elapsed_seconds << "\n";
        os.unsetf(std::ios::fixed);
    }
    return os.str();
}

} // namespace npp
