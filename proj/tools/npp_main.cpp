// Command-line workbench for training small classifiers, analyzing a class's
// high-relevance neurons from held-out probe data, severing that path by
// weight masking, and evaluating the result.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "npp/npp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitZeroShot = 4;

struct DataPaths {
    std::string train_images, train_labels, test_images, test_labels;
};

std::string env_data_dir() {
    const char* v = std::getenv("NPP_DATA_DIR");
    return v ? v : "";
}

DataPaths resolve_data_dir(const std::string& dir_flag) {
    std::string dir = dir_flag.empty() ? env_data_dir() : dir_flag;
    if (dir.empty()) {
        throw npp::ConfigError("--data is required (or set NPP_DATA_DIR)");
    }
    fs::path p(dir);
    return {(p / "train-images-idx3-ubyte").string(), (p / "train-labels-idx1-ubyte").string(),
            (p / "t10k-images-idx3-ubyte").string(), (p / "t10k-labels-idx1-ubyte").string()};
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw npp::IoError("cannot write " + path);
    out << j.dump(2) << "\n";
}

void write_config_echo(const json& config, const fs::path& path) {
    write_json(config, path.string());
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<double> split_csv_doubles(const std::string& s) {
    std::vector<double> out;
    for (const auto& tok : split_csv(s)) out.push_back(std::stod(tok));
    return out;
}

std::vector<std::size_t> split_csv_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& tok : split_csv(s)) out.push_back(std::stoull(tok));
    return out;
}

npp::Model build_arch(const std::string& arch, const npp::Shape& input_shape,
                      std::size_t classes, std::uint64_t seed) {
    if (arch.rfind("mlp-", 0) == 0) {
        std::size_t hidden = std::stoull(arch.substr(4));
        return npp::make_mlp(input_shape, hidden, classes, seed);
    }
    if (arch == "allcnn") return npp::make_allcnn(input_shape, 128, classes, seed);
    if (arch.rfind("allcnn-", 0) == 0) {
        std::size_t hidden = std::stoull(arch.substr(7));
        return npp::make_allcnn(input_shape, hidden, classes, seed);
    }
    throw npp::ConfigError("unknown --arch '" + arch + "' (mlp-<H> or allcnn[-<H>])");
}

// Subsample without replacement under a stage-derived seed.
npp::LabeledDataset subsample(const npp::LabeledDataset& ds, std::size_t n, std::uint64_t seed,
                              const std::string& stage) {
    if (n == 0 || n >= ds.size()) return ds;
    std::vector<std::size_t> idx(ds.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    npp::Rng rng(npp::derive_seed(seed, stage));
    rng.shuffle(idx);
    npp::LabeledDataset out;
    out.class_count = ds.class_count;
    out.split = ds.split;
    for (std::size_t i = 0; i < n; ++i) out.samples.push_back(ds.samples[idx[i]]);
    return out;
}

// Calibration protocol: members are training samples of non-target classes,
// non-members held-out test samples of non-target classes, targets the
// training samples of the unlearning class.
npp::MiaInputs make_mia_inputs(const npp::LabeledDataset& train_set,
                               const npp::LabeledDataset& test_set, int target_class,
                               std::uint64_t seed, std::size_t cap = 1000) {
    npp::MiaInputs mia;
    npp::LabeledDataset train_targets;
    train_targets.class_count = train_set.class_count;
    npp::LabeledDataset train_rest;
    train_rest.class_count = train_set.class_count;
    for (const auto& s : train_set.samples) {
        (s.label == target_class ? train_targets : train_rest).samples.push_back(s);
    }
    npp::LabeledDataset test_rest;
    test_rest.class_count = test_set.class_count;
    for (const auto& s : test_set.samples) {
        if (s.label != target_class) test_rest.samples.push_back(s);
    }
    mia.member_targets = subsample(train_targets, cap, seed, "mia-targets");
    mia.calibration_members = subsample(train_rest, cap, seed, "mia-members");
    mia.calibration_nonmembers = subsample(test_rest, cap, seed, "mia-nonmembers");
    return mia;
}

// ---------------------------------------------------------------- synth ---

int cmd_synth(const std::string& out_dir, std::size_t train_n, std::size_t test_n,
              std::uint64_t seed) {
    fs::create_directories(out_dir);
    DataPaths paths = resolve_data_dir(out_dir);
    npp::DigitImages train_imgs = npp::synth_digit_images(train_n, npp::derive_seed(seed, "train"));
    npp::DigitImages test_imgs = npp::synth_digit_images(test_n, npp::derive_seed(seed, "test"));
    npp::write_idx(train_imgs, paths.train_images, paths.train_labels);
    npp::write_idx(test_imgs, paths.test_images, paths.test_labels);
    write_config_echo(json{{"command", "synth"},
                           {"out", out_dir},
                           {"train_n", train_n},
                           {"test_n", test_n},
                           {"seed", seed}},
                      fs::path(out_dir) / "synth.config.json");
    std::cout << "wrote " << train_n << " train / " << test_n << " test images to " << out_dir
              << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- train ---

int cmd_train(const std::string& data_dir, const std::string& arch, std::size_t epochs, double lr,
              std::size_t batch, std::uint64_t seed, int exclude_class, const std::string& name,
              const std::string& out_path) {
    DataPaths paths = resolve_data_dir(data_dir);
    npp::LabeledDataset train_set = npp::load_idx(paths.train_images, paths.train_labels, "train");
    std::vector<std::string> sources = {paths.train_images, paths.train_labels};
    if (exclude_class >= 0) {
        train_set = npp::remove_class(train_set, exclude_class);
        std::cout << "excluded class " << exclude_class << ", " << train_set.size()
                  << " samples remain\n";
    }
    npp::Model model = build_arch(arch, train_set.samples.front().input.shape(),
                                  train_set.class_count, seed);
    model.meta.name = name.empty() ? arch : name;
    npp::TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.seed = seed;
    auto [trained, elapsed] = npp::timed([&] {
        return npp::train(model, train_set, cfg, [&](std::size_t epoch, double loss) {
            std::cout << "epoch " << (epoch + 1) << "/" << epochs << " mean-loss " << loss << "\n";
        });
    });
    npp::save_model(trained, out_path);

    fs::path out(out_path);
    npp::write_manifest(train_set, sources, (out.parent_path() / (out.stem().string() + ".manifest.json")).string());
    write_config_echo(json{{"command", "train"},
                           {"data", data_dir},
                           {"arch", arch},
                           {"epochs", epochs},
                           {"lr", lr},
                           {"batch", batch},
                           {"seed", seed},
                           {"exclude_class", exclude_class},
                           {"out", out_path}},
                      out.parent_path() / (out.stem().string() + ".config.json"));
    std::cout << "trained " << model.meta.name << " in " << elapsed << "s -> " << out_path << "\n";
    return kExitOk;
}

// -------------------------------------------------------------- analyze ---

struct RuleFlags {
    std::string rule = "epsilon";
    double eps = 1e-6;
    double gamma = 0.25;
};

npp::PropagationRule rule_from_flags(const RuleFlags& rf) {
    return npp::parse_rule(rf.rule, rf.eps, rf.gamma);
}

npp::NeuronSet analyze_neuron_set(const npp::Model& model, const npp::LabeledDataset& probe,
                                  const npp::PropagationRule& rule, long layer_flag,
                                  std::size_t k, std::size_t jobs) {
    std::size_t layer = layer_flag < 0 ? npp::default_target_layer(model)
                                       : static_cast<std::size_t>(layer_flag);
    // reuse the unlearn pipeline with m_p = 0: analysis only, model untouched
    auto outcome = npp::unlearn(model, probe, rule, layer, k, 0.0, npp::PerturbMode::Zero, 1.0, jobs);
    return outcome.neuron_set;
}

int cmd_analyze(const std::string& model_path, const std::string& data_dir, int target_class,
                std::size_t probe_n, const RuleFlags& rf, std::size_t k, long layer,
                std::uint64_t seed, std::size_t jobs, const std::string& out_path) {
    npp::Model model = npp::load_model(model_path);
    DataPaths paths = resolve_data_dir(data_dir);
    npp::LabeledDataset test_set = npp::load_idx(paths.test_images, paths.test_labels, "test");
    npp::LabeledDataset probe =
        npp::make_probe_set(test_set, {target_class, probe_n, seed}, model.meta.fingerprint);
    npp::PropagationRule rule = rule_from_flags(rf);
    auto [set, elapsed] =
        npp::timed([&] { return analyze_neuron_set(model, probe, rule, layer, k, jobs); });
    write_json(npp::neuron_set_to_json(set), out_path);
    fs::path out(out_path);
    write_config_echo(json{{"command", "analyze"},
                           {"model", model_path},
                           {"data", data_dir},
                           {"class", target_class},
                           {"probe_n", probe_n},
                           {"rule", rule.name()},
                           {"eps", rf.eps},
                           {"gamma", rf.gamma},
                           {"k", k},
                           {"layer", layer},
                           {"seed", seed}},
                      out.parent_path() / (out.stem().string() + ".config.json"));
    std::cout << "analyzed " << probe.size() << " probes in " << elapsed << "s, z = " << set.z()
              << " -> " << out_path << "\n";
    return kExitOk;
}

// -------------------------------------------------------------- perturb ---

int cmd_perturb(const std::string& model_path, const std::string& set_path, double m_p,
                const std::string& mode_name, double noise_factor, const std::string& out_path) {
    npp::Model model = npp::load_model(model_path);
    std::ifstream in(set_path);
    if (!in) throw npp::IoError("cannot open " + set_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw npp::FormatError(std::string("malformed neuron set JSON: ") + e.what());
    }
    npp::NeuronSet set = npp::neuron_set_from_json(j);
    npp::PerturbMode mode = npp::parse_perturb_mode(mode_name);
    auto sel = npp::select_targets(set, m_p);
    if (sel.capped) {
        std::cerr << "warning: requested " << m_p << " of " << set.layer_width
                  << " neurons but only z = " << set.z() << " were ranked; masking all of them\n";
    }
    auto mask = npp::build_mask(model, set.layer_index, sel.positions, mode, noise_factor);
    npp::Model unlearned = npp::apply_mask(model, mask);
    npp::save_model(unlearned, out_path);
    fs::path out(out_path);
    write_json(npp::mask_to_json(mask),
               (out.parent_path() / (out.stem().string() + ".mask.json")).string());
    write_config_echo(json{{"command", "perturb"},
                           {"model", model_path},
                           {"neuron_set", set_path},
                           {"mp", m_p},
                           {"mode", mode_name},
                           {"noise_factor", noise_factor},
                           {"out", out_path}},
                      out.parent_path() / (out.stem().string() + ".config.json"));
    std::cout << "masked " << mask.positions.size() << " neurons in layer " << mask.layer_index
              << " -> " << out_path << "\n";
    return kExitOk;
}

// -------------------------------------------------------------- unlearn ---

int cmd_unlearn(const std::string& model_path, const std::string& data_dir,
                const std::string& probe_images, const std::string& probe_labels,
                int target_class, std::size_t probe_n, const RuleFlags& rf, std::size_t k,
                double m_p, const std::string& mode_name, double noise_factor, long layer_flag,
                std::uint64_t seed, std::size_t jobs, const std::string& out_dir) {
    npp::Model model = npp::load_model(model_path);
    DataPaths paths = resolve_data_dir(data_dir);
    npp::LabeledDataset train_set = npp::load_idx(paths.train_images, paths.train_labels, "train");
    npp::LabeledDataset test_set = npp::load_idx(paths.test_images, paths.test_labels, "test");

    // probes come from the test split unless an explicit probe source is
    // given; either way the zero-shot check runs against the fingerprint
    npp::LabeledDataset probe_source = test_set;
    if (!probe_images.empty() || !probe_labels.empty()) {
        if (probe_images.empty() || probe_labels.empty()) {
            throw npp::ConfigError("--probe-images and --probe-labels must be given together");
        }
        probe_source = npp::load_idx(probe_images, probe_labels, "test");
    }
    npp::LabeledDataset probe =
        npp::make_probe_set(probe_source, {target_class, probe_n, seed}, model.meta.fingerprint);

    npp::PropagationRule rule = rule_from_flags(rf);
    std::size_t layer = layer_flag < 0 ? npp::default_target_layer(model)
                                       : static_cast<std::size_t>(layer_flag);
    npp::PerturbMode mode = npp::parse_perturb_mode(mode_name);
    auto [outcome, elapsed] = npp::timed(
        [&] { return npp::unlearn(model, probe, rule, layer, k, m_p, mode, noise_factor, jobs); });
    if (outcome.capped) {
        std::cerr << "warning: m_p = " << m_p << " exceeds ranked neurons z = "
                  << outcome.neuron_set.z() << "; masked all of them\n";
    }

    fs::create_directories(out_dir);
    fs::path out(out_dir);
    npp::save_model(outcome.model, (out / "model.nppm").string());
    write_json(npp::neuron_set_to_json(outcome.neuron_set), (out / "neuron_set.json").string());
    write_json(npp::mask_to_json(outcome.mask), (out / "mask.json").string());

    npp::MiaInputs mia = make_mia_inputs(train_set, test_set, target_class, seed);
    npp::ReportConfig echo{rule.name(), k, m_p, static_cast<long>(layer), mode_name, seed};
    std::vector<npp::NamedModel> entries = {{"original", &model, {}, 0.0},
                                            {"unlearned", &outcome.model, echo, elapsed}};
    auto reports = npp::compare(entries, test_set, target_class, mia,
                                npp::derive_seed(seed, "mia"));
    write_json(npp::reports_to_json(reports), (out / "report.json").string());
    write_config_echo(json{{"command", "unlearn"},
                           {"model", model_path},
                           {"data", data_dir},
                           {"probe_images", probe_images},
                           {"probe_labels", probe_labels},
                           {"class", target_class},
                           {"probe_n", probe_n},
                           {"rule", rule.name()},
                           {"eps", rf.eps},
                           {"gamma", rf.gamma},
                           {"k", k},
                           {"mp", m_p},
                           {"mode", mode_name},
                           {"noise_factor", noise_factor},
                           {"layer", static_cast<long>(layer)},
                           {"seed", seed},
                           {"out", out_dir}},
                      out / "config.json");
    std::cout << npp::render_report_table(reports);
    std::cout << "unlearned model and audit bundle -> " << out_dir << "\n";
    return kExitOk;
}

// ----------------------------------------------------------------- eval ---

int cmd_eval(const std::vector<std::string>& model_specs, const std::string& data_dir,
             int target_class, std::uint64_t seed, const std::string& out_path) {
    if (model_specs.empty()) throw npp::ConfigError("--model is required at least once");
    DataPaths paths = resolve_data_dir(data_dir);
    npp::LabeledDataset train_set = npp::load_idx(paths.train_images, paths.train_labels, "train");
    npp::LabeledDataset test_set = npp::load_idx(paths.test_images, paths.test_labels, "test");

    std::vector<std::pair<std::string, npp::Model>> loaded;
    for (const auto& spec : model_specs) {
        auto eq = spec.find('=');
        std::string name = eq == std::string::npos ? fs::path(spec).stem().string()
                                                   : spec.substr(0, eq);
        std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
        loaded.emplace_back(name, npp::load_model(path));
    }
    std::vector<npp::NamedModel> entries;
    for (auto& [name, model] : loaded) entries.push_back({name, &model, {}, 0.0});

    npp::MiaInputs mia = make_mia_inputs(train_set, test_set, target_class, seed);
    auto reports = npp::compare(entries, test_set, target_class, mia,
                                npp::derive_seed(seed, "mia"));
    write_json(npp::reports_to_json(reports), out_path);
    fs::path out(out_path);
    write_config_echo(json{{"command", "eval"},
                           {"models", model_specs},
                           {"data", data_dir},
                           {"class", target_class},
                           {"seed", seed},
                           {"out", out_path}},
                      out.parent_path() / (out.stem().string() + ".config.json"));
    std::cout << npp::render_report_table(reports);
    return kExitOk;
}

// ---------------------------------------------------------------- sweep ---

int cmd_sweep(const std::string& model_path, const std::string& data_dir, int target_class,
              std::size_t probe_n, const std::string& rules_csv, const std::string& ks_csv,
              const std::string& mps_csv, const std::string& mode_name, double noise_factor,
              double eps, double gamma, long layer_flag, std::uint64_t seed, std::size_t jobs,
              const std::string& out_path) {
    npp::Model model = npp::load_model(model_path);
    DataPaths paths = resolve_data_dir(data_dir);
    npp::LabeledDataset train_set = npp::load_idx(paths.train_images, paths.train_labels, "train");
    npp::LabeledDataset test_set = npp::load_idx(paths.test_images, paths.test_labels, "test");
    npp::LabeledDataset probe =
        npp::make_probe_set(test_set, {target_class, probe_n, seed}, model.meta.fingerprint);

    std::vector<std::string> rules = split_csv(rules_csv);
    std::vector<std::size_t> ks = split_csv_sizes(ks_csv);
    std::vector<double> mps = split_csv_doubles(mps_csv);
    if (rules.empty() || ks.empty() || mps.empty()) {
        throw npp::ConfigError("--rules, --ks and --mps must be non-empty lists");
    }
    std::size_t layer = layer_flag < 0 ? npp::default_target_layer(model)
                                       : static_cast<std::size_t>(layer_flag);
    npp::PerturbMode mode = npp::parse_perturb_mode(mode_name);
    npp::MiaInputs mia = make_mia_inputs(train_set, test_set, target_class, seed);

    struct Row {
        std::string rule;
        std::size_t k;
        double mp, ag, at, fr, t;
    };
    std::vector<std::vector<Row>> groups(rules.size() * ks.size());

    auto run_group = [&](std::size_t gi) {
        const std::string& rule_name = rules[gi / ks.size()];
        std::size_t k = ks[gi % ks.size()];
        npp::PropagationRule rule = npp::parse_rule(rule_name, eps, gamma);
        // one analysis serves every m_p in the group
        auto [set, t_analyze] = npp::timed([&] {
            auto outcome = npp::unlearn(model, probe, rule, layer, k, 0.0, mode, noise_factor, 1);
            return outcome.neuron_set;
        });
        for (double mp : mps) {
            auto [masked, t_mask] = npp::timed([&] {
                auto sel = npp::select_targets(set, mp);
                return npp::apply_mask(model,
                                       npp::build_mask(model, layer, sel.positions, mode, noise_factor));
            });
            npp::ClassMetrics cm = npp::class_metrics(masked, test_set, target_class);
            double fr = npp::forgetting_rate(masked, mia.member_targets, mia.calibration_members,
                                             mia.calibration_nonmembers,
                                             npp::derive_seed(seed, "mia"));
            groups[gi].push_back({rule_name, k, mp, cm.global_accuracy, cm.target_accuracy, fr,
                                  t_analyze + t_mask});
        }
    };

    std::size_t n_groups = groups.size();
    if (jobs <= 1 || n_groups <= 1) {
        for (std::size_t gi = 0; gi < n_groups; ++gi) run_group(gi);
    } else {
        std::size_t workers = std::min(jobs, n_groups);
        std::vector<std::future<void>> futures;
        for (std::size_t w = 0; w < workers; ++w) {
            futures.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t gi = w; gi < n_groups; gi += workers) run_group(gi);
            }));
        }
        for (auto& f : futures) f.get();
    }

    std::ofstream csv(out_path);
    if (!csv) throw npp::IoError("cannot write " + out_path);
    csv << "rule,k,mp,A_g,A_t,Fr,T_seconds\n";
    for (const auto& group : groups) {
        for (const auto& r : group) {
            csv << r.rule << "," << r.k << "," << r.mp << "," << r.ag << "," << r.at << "," << r.fr
                << "," << r.t << "\n";
        }
    }
    fs::path out(out_path);
    write_config_echo(json{{"command", "sweep"},
                           {"model", model_path},
                           {"data", data_dir},
                           {"class", target_class},
                           {"probe_n", probe_n},
                           {"rules", rules},
                           {"ks", ks},
                           {"mps", mps},
                           {"mode", mode_name},
                           {"eps", eps},
                           {"gamma", gamma},
                           {"layer", layer_flag},
                           {"seed", seed},
                           {"out", out_path}},
                      out.parent_path() / (out.stem().string() + ".config.json"));
    std::cout << "sweep wrote " << rules.size() * ks.size() * mps.size() << " rows -> " << out_path
              << "\n";
    return kExitOk;
}

// ------------------------------------------------------------ attribute ---

int cmd_attribute(const std::string& model_path, const std::string& data_dir,
                  const std::string& samples_csv, const std::string& rules_csv, int class_flag,
                  double eps, double gamma, const std::string& out_dir) {
    npp::Model model = npp::load_model(model_path);
    DataPaths paths = resolve_data_dir(data_dir);
    npp::LabeledDataset test_set = npp::load_idx(paths.test_images, paths.test_labels, "test");
    std::vector<std::size_t> ids = split_csv_sizes(samples_csv);
    std::vector<std::string> rules = split_csv(rules_csv);
    if (ids.empty() || rules.empty()) {
        throw npp::ConfigError("--samples and --rules must be non-empty lists");
    }
    fs::create_directories(out_dir);
    std::size_t written = 0;
    for (std::size_t id : ids) {
        if (id >= test_set.size()) {
            throw npp::ConfigError("sample index " + std::to_string(id) + " out of range");
        }
        const npp::Sample& s = test_set.samples[id];
        int target = class_flag >= 0 ? class_flag : s.label;
        for (const auto& rule_name : rules) {
            npp::PropagationRule rule = npp::parse_rule(rule_name, eps, gamma);
            auto stack = npp::propagate_full(model, s.input, rule, target);
            std::string file =
                (fs::path(out_dir) / npp::heatmap_filename(std::to_string(id), rule)).string();
            npp::write_pgm(stack.input_relevance, file);
            ++written;
        }
    }
    write_config_echo(json{{"command", "attribute"},
                           {"model", model_path},
                           {"data", data_dir},
                           {"samples", samples_csv},
                           {"rules", rules_csv},
                           {"class", class_flag},
                           {"out", out_dir}},
                      fs::path(out_dir) / "attribute.config.json");
    std::cout << "wrote " << written << " heatmaps -> " << out_dir << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"zero-shot class unlearning workbench (relevance analysis + neuron masking)"};
    app.require_subcommand(1);

    // ---- synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic digit dataset in IDX format");
    std::string synth_out = "data";
    std::size_t synth_train = 8000, synth_test = 2000;
    std::uint64_t synth_seed = 7;
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--train-n", synth_train, "training images");
    synth->add_option("--test-n", synth_test, "test images");
    synth->add_option("--seed", synth_seed, "generator seed");

    // ---- train
    auto* train_cmd = app.add_subcommand("train", "train a classifier on IDX data");
    std::string tr_data, tr_arch = "mlp-500", tr_name, tr_out = "model.nppm";
    std::size_t tr_epochs = 5, tr_batch = 32;
    double tr_lr = 0.1;
    std::uint64_t tr_seed = 7;
    int tr_exclude = -1;
    train_cmd->add_option("--data", tr_data, "data directory (default $NPP_DATA_DIR)");
    train_cmd->add_option("--arch", tr_arch, "mlp-<H> or allcnn[-<H>]");
    train_cmd->add_option("--epochs", tr_epochs, "training epochs");
    train_cmd->add_option("--lr", tr_lr, "learning rate");
    train_cmd->add_option("--batch", tr_batch, "batch size");
    train_cmd->add_option("--seed", tr_seed, "training seed");
    train_cmd->add_option("--exclude-class", tr_exclude, "remove this class before training");
    train_cmd->add_option("--name", tr_name, "model name (defaults to arch)");
    train_cmd->add_option("--out", tr_out, "output model path");

    // ---- analyze
    auto* analyze = app.add_subcommand("analyze", "rank class-relevant neurons from probe data");
    std::string an_model, an_data, an_out = "neuron_set.json";
    int an_class = 1;
    std::size_t an_probe = 36, an_k = 50, an_jobs = 0;
    long an_layer = -1;
    std::uint64_t an_seed = 7;
    RuleFlags an_rule;
    analyze->add_option("--model", an_model, "model path")->required();
    analyze->add_option("--data", an_data, "data directory");
    analyze->add_option("--class", an_class, "unlearning class");
    analyze->add_option("--probe-n", an_probe, "probe sample count");
    analyze->add_option("--rule", an_rule.rule, "epsilon|gamma+epsilon|alpha1beta0|alpha2beta1");
    analyze->add_option("--eps", an_rule.eps, "epsilon stabilizer");
    analyze->add_option("--gamma", an_rule.gamma, "gamma for gamma+epsilon");
    analyze->add_option("--k", an_k, "top-k neurons per probe");
    analyze->add_option("--layer", an_layer, "target layer index (-1 = last dense before output)");
    analyze->add_option("--seed", an_seed, "probe selection seed");
    analyze->add_option("--jobs", an_jobs, "parallel probe jobs (0 = hardware)");
    analyze->add_option("--out", an_out, "neuron set JSON output");

    // ---- perturb
    auto* perturb = app.add_subcommand("perturb", "mask neurons from a saved neuron set");
    std::string pe_model, pe_set, pe_mode = "zero", pe_out = "unlearned.nppm";
    double pe_mp = 0.16, pe_noise = 1.0;
    perturb->add_option("--model", pe_model, "model path")->required();
    perturb->add_option("--neuron-set", pe_set, "neuron set JSON from analyze")->required();
    perturb->add_option("--mp", pe_mp, "fraction of layer neurons to mask");
    perturb->add_option("--mode", pe_mode, "zero|gauss|laplace");
    perturb->add_option("--noise-factor", pe_noise, "noise scale in layer-weight stds");
    perturb->add_option("--out", pe_out, "output model path");

    // ---- unlearn
    auto* unlearn_cmd = app.add_subcommand("unlearn", "one-shot analyze + perturb + report");
    std::string un_model, un_data, un_probe_images, un_probe_labels, un_mode = "zero",
                un_out = "unlearn_out";
    int un_class = 1;
    std::size_t un_probe = 36, un_k = 50, un_jobs = 0;
    double un_mp = 0.16, un_noise = 1.0;
    long un_layer = -1;
    std::uint64_t un_seed = 7;
    RuleFlags un_rule;
    unlearn_cmd->add_option("--model", un_model, "model path")->required();
    unlearn_cmd->add_option("--data", un_data, "data directory");
    unlearn_cmd->add_option("--probe-images", un_probe_images, "explicit probe image file");
    unlearn_cmd->add_option("--probe-labels", un_probe_labels, "explicit probe label file");
    unlearn_cmd->add_option("--class", un_class, "unlearning class");
    unlearn_cmd->add_option("--probe-n", un_probe, "probe sample count");
    unlearn_cmd->add_option("--rule", un_rule.rule, "propagation rule");
    unlearn_cmd->add_option("--eps", un_rule.eps, "epsilon stabilizer");
    unlearn_cmd->add_option("--gamma", un_rule.gamma, "gamma for gamma+epsilon");
    unlearn_cmd->add_option("--k", un_k, "top-k neurons per probe");
    unlearn_cmd->add_option("--mp", un_mp, "fraction of layer neurons to mask");
    unlearn_cmd->add_option("--mode", un_mode, "zero|gauss|laplace");
    unlearn_cmd->add_option("--noise-factor", un_noise, "noise scale");
    unlearn_cmd->add_option("--layer", un_layer, "target layer (-1 = auto)");
    unlearn_cmd->add_option("--seed", un_seed, "pipeline seed");
    unlearn_cmd->add_option("--jobs", un_jobs, "parallel probe jobs");
    unlearn_cmd->add_option("--out", un_out, "output directory");

    // ---- eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate models: A_t, A_g, Fr");
    std::vector<std::string> ev_models;
    std::string ev_data, ev_out = "report.json";
    int ev_class = 1;
    std::uint64_t ev_seed = 7;
    eval_cmd->add_option("--model", ev_models, "model path or name=path (repeatable)")->required();
    eval_cmd->add_option("--data", ev_data, "data directory");
    eval_cmd->add_option("--class", ev_class, "unlearning class");
    eval_cmd->add_option("--seed", ev_seed, "attack seed");
    eval_cmd->add_option("--out", ev_out, "report JSON output");

    // ---- sweep
    auto* sweep = app.add_subcommand("sweep", "rule/k/m_p grid, one CSV row per combination");
    std::string sw_model, sw_data, sw_rules = "epsilon,gamma+epsilon,alpha1beta0,alpha2beta1";
    std::string sw_ks = "50", sw_mps = "0,0.04,0.08,0.12,0.16,0.2", sw_mode = "zero",
                sw_out = "sweep.csv";
    int sw_class = 1;
    std::size_t sw_probe = 36, sw_jobs = 1;
    double sw_noise = 1.0, sw_eps = 1e-6, sw_gamma = 0.25;
    long sw_layer = -1;
    std::uint64_t sw_seed = 7;
    sweep->add_option("--model", sw_model, "model path")->required();
    sweep->add_option("--data", sw_data, "data directory");
    sweep->add_option("--class", sw_class, "unlearning class");
    sweep->add_option("--probe-n", sw_probe, "probe sample count");
    sweep->add_option("--rules", sw_rules, "comma-separated rule list");
    sweep->add_option("--ks", sw_ks, "comma-separated k list");
    sweep->add_option("--mps", sw_mps, "comma-separated m_p list");
    sweep->add_option("--mode", sw_mode, "zero|gauss|laplace");
    sweep->add_option("--noise-factor", sw_noise, "noise scale");
    sweep->add_option("--eps", sw_eps, "epsilon stabilizer");
    sweep->add_option("--gamma", sw_gamma, "gamma for gamma+epsilon");
    sweep->add_option("--layer", sw_layer, "target layer (-1 = auto)");
    sweep->add_option("--seed", sw_seed, "pipeline seed");
    sweep->add_option("--jobs", sw_jobs, "parallel sweep jobs");
    sweep->add_option("--out", sw_out, "CSV output path");

    // ---- attribute
    auto* attribute = app.add_subcommand("attribute", "export relevance heatmaps as PGM");
    std::string at_model, at_data, at_samples = "0", at_rules = "epsilon", at_out = "heatmaps";
    int at_class = -1;
    double at_eps = 1e-6, at_gamma = 0.25;
    attribute->add_option("--model", at_model, "model path")->required();
    attribute->add_option("--data", at_data, "data directory");
    attribute->add_option("--samples", at_samples, "comma-separated test indices");
    attribute->add_option("--rules", at_rules, "comma-separated rule list");
    attribute->add_option("--class", at_class, "attribution class (-1 = sample label)");
    attribute->add_option("--eps", at_eps, "epsilon stabilizer");
    attribute->add_option("--gamma", at_gamma, "gamma for gamma+epsilon");
    attribute->add_option("--out", at_out, "output directory");

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return cmd_synth(synth_out, synth_train, synth_test, synth_seed);
        if (train_cmd->parsed()) {
            return cmd_train(tr_data, tr_arch, tr_epochs, tr_lr, tr_batch, tr_seed, tr_exclude,
                             tr_name, tr_out);
        }
        if (analyze->parsed()) {
            return cmd_analyze(an_model, an_data, an_class, an_probe, an_rule, an_k, an_layer,
                               an_seed, an_jobs, an_out);
        }
        if (perturb->parsed()) {
            return cmd_perturb(pe_model, pe_set, pe_mp, pe_mode, pe_noise, pe_out);
        }
        if (unlearn_cmd->parsed()) {
            return cmd_unlearn(un_model, un_data, un_probe_images, un_probe_labels, un_class,
                               un_probe, un_rule, un_k, un_mp, un_mode, un_noise, un_layer,
                               un_seed, un_jobs, un_out);
        }
        if (eval_cmd->parsed()) return cmd_eval(ev_models, ev_data, ev_class, ev_seed, ev_out);
        if (sweep->parsed()) {
            return cmd_sweep(sw_model, sw_data, sw_class, sw_probe, sw_rules, sw_ks, sw_mps,
                             sw_mode, sw_noise, sw_eps, sw_gamma, sw_layer, sw_seed, sw_jobs,
                             sw_out);
        }
        if (attribute->parsed()) {
            return cmd_attribute(at_model, at_data, at_samples, at_rules, at_class, at_eps,
                                 at_gamma, at_out);
        }
        return kExitConfig;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const npp::ZeroShotError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitZeroShot;
    } catch (const npp::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const npp::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const npp::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const npp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
