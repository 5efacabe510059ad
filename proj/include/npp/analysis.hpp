#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "npp/lrp.hpp"

namespace npp {

// One probe sample's top-k most relevant neurons in a layer, descending by
// relevance, ties broken toward the smaller position.
struct RankedNeuronList {
    std::size_t layer_index = 0;
    std::size_t k = 0;
    struct Entry {
        double relevance;
        std::size_t position;
    };
    std::vector<Entry> entries;
};

// How many probe samples ranked each position among their top-k, plus the
// summed relevance per position (used for deterministic tie-breaking).
struct FrequencyTable {
    std::size_t layer_index = 0;
    std::size_t k = 0;
    std::size_t layer_width = 0;
    std::size_t probe_count = 0;
    std::map<std::size_t, std::size_t> counts;
    std::map<std::size_t, double> relevance_sums;
};

// The estimated classification path: positions ordered by occurrence count
// descending (ties: larger summed relevance, then smaller position).
struct NeuronSet {
    std::size_t layer_index = 0;
    std::size_t k = 0;
    std::size_t layer_width = 0;
    std::size_t probe_count = 0;
    struct Entry {
        std::size_t position;
        std::size_t count;
        double relevance_sum;
    };
    std::vector<Entry> entries;

    std::size_t z() const { return entries.size(); }
};

inline RankedNeuronList top_k_for_sample(const RelevanceStack& stack, std::size_t layer_index,
                                         std::size_t k) {
    const Tensor& rel = layer_relevance(stack, layer_index);
    if (stack.kinds[layer_index] != LayerKind::Dense) {
        throw ConfigError("top_k_for_sample: layer " + std::to_string(layer_index) +
                          " is not a dense layer");
    }
    std::size_t m = rel.numel();
    if (k < 1 || k > m) {
        throw ConfigError("k = " + std::to_string(k) + " out of range [1, " + std::to_string(m) +
                          "]");
    }
    RankedNeuronList list;
    list.layer_index = layer_index;
    list.k = k;
    list.entries.reserve(m);
    for (std::size_t p = 0; p < m; ++p) list.entries.push_back({rel[p], p});
    std::sort(list.entries.begin(), list.entries.end(), [](const auto& a, const auto& b) {
        if (a.relevance != b.relevance) return a.relevance > b.relevance;
        return a.position < b.position;
    });
    list.entries.resize(k);
    return list;
}

inline FrequencyTable accumulate_frequency(const std::vector<RankedNeuronList>& lists,
                                           std::size_t layer_width = 0) {
    if (lists.empty()) throw ConfigError("accumulate_frequency: no probe lists");
    FrequencyTable table;
    table.layer_index = lists.front().layer_index;
    table.k = lists.front().k;
    table.layer_width = layer_width;
    table.probe_count = lists.size();
    for (const auto& list : lists) {
        if (list.layer_index != table.layer_index || list.k != table.k) {
            throw ConfigError("accumulate_frequency: mismatched layer index or k across lists");
        }
        for (const auto& e : list.entries) {
            table.counts[e.position] += 1;
            table.relevance_sums[e.position] += e.relevance;
            table.layer_width = std::max(table.layer_width, e.position + 1);
        }
    }
    return table;
}

inline NeuronSet build_neuron_set(const FrequencyTable& table) {
    if (table.counts.empty()) throw ConfigError("build_neuron_set: empty frequency table");
    NeuronSet set;
    set.layer_index = table.layer_index;
    set.k = table.k;
    set.layer_width = table.layer_width;
    set.probe_count = table.probe_count;
    for (const auto& [pos, count] : table.counts) {
        set.entries.push_back({pos, count, table.relevance_sums.at(pos)});
    }
    std::sort(set.entries.begin(), set.entries.end(), [](const auto& a, const auto& b) {
        if (a.count != b.count) return a.count > b.count;
        if (a.relevance_sum != b.relevance_sum) return a.relevance_sum > b.relevance_sum;
        return a.position < b.position;
    });
    // z must land in [k, m]; anything else means the lists were corrupted
    if (set.z() < set.k || set.z() > set.layer_width) {
        throw Error("neuron set size z = " + std::to_string(set.z()) + " violates [k, m] = [" +
                    std::to_string(set.k) + ", " + std::to_string(set.layer_width) + "]");
    }
    return set;
}

struct TargetSelection {
    std::vector<std::size_t> positions;
    bool capped = false; // requested more than z; selection clipped to z
};

// First floor(m_p * m) positions of the neuron set. Requests beyond z return
// all z positions and flag the cap.
inline TargetSelection select_targets(const NeuronSet& set, double m_p) {
    if (m_p < 0.0 || m_p > 1.0) throw ConfigError("m_p must be in [0, 1]");
    std::size_t want = static_cast<std::size_t>(std::floor(m_p * static_cast<double>(set.layer_width)));
    TargetSelection sel;
    sel.capped = want > set.z();
    std::size_t take = std::min(want, set.z());
    sel.positions.reserve(take);
    for (std::size_t i = 0; i < take; ++i) sel.positions.push_back(set.entries[i].position);
    return sel;
}

inline nlohmann::json neuron_set_to_json(const NeuronSet& set) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : set.entries) {
        entries.push_back({{"position", e.position}, {"count", e.count},
                           {"relevance_sum", e.relevance_sum}});
    }
    return nlohmann::json{{"layer_index", set.layer_index},
                          {"k", set.k},
                          {"layer_width", set.layer_width},
                          {"probe_count", set.probe_count},
                          {"entries", entries}};
}

inline NeuronSet neuron_set_from_json(const nlohmann::json& j) {
    NeuronSet set;
    try {
        set.layer_index = j.at("layer_index").get<std::size_t>();
        set.k = j.at("k").get<std::size_t>();
        set.layer_width = j.value("layer_width", std::size_t{0});
        set.probe_count = j.at("probe_count").get<std::size_t>();
        for (const auto& e : j.at("entries")) {
            set.entries.push_back({e.at("position").get<std::size_t>(),
                                   e.at("count").get<std::size_t>(),
                                   e.at("relevance_sum").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed neuron set: ") + e.what());
    }
    return set;
}

} // namespace npp
