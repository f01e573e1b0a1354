// SPDX-License-Identifier: Apache-2.0
#include "moeplan/trace.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace moeplan {

void ActivationTrace::validate() const {
    if (num_experts < 1) throw std::invalid_argument("trace: num_experts must be >= 1");
    if (experts_per_token < 1 || experts_per_token > num_experts)
        throw std::invalid_argument("trace: experts_per_token must be in [1, num_experts]");
    if (iterations.empty()) throw std::invalid_argument("empty trace");
    const std::size_t layers = iterations[0].layers.size();
    if (layers == 0) throw std::invalid_argument("empty trace");
    const std::size_t batch = iterations[0].layers[0].size();
    if (batch == 0) throw std::invalid_argument("empty trace");
    for (std::size_t it = 0; it < iterations.size(); ++it) {
        if (iterations[it].layers.size() != layers)
            throw std::invalid_argument("trace: iteration " + std::to_string(it) +
                                        " has a different layer count");
        for (std::size_t l = 0; l < layers; ++l) {
            const LayerTokens& tokens = iterations[it].layers[l];
            if (tokens.size() != batch)
                throw std::invalid_argument("trace: iteration " + std::to_string(it) + " layer " +
                                            std::to_string(l) + " has a different batch size");
            for (std::size_t t = 0; t < tokens.size(); ++t) {
                const TokenExperts& ids = tokens[t];
                if (int(ids.size()) != experts_per_token)
                    throw std::invalid_argument("trace: token activates " +
                                                std::to_string(ids.size()) + " experts, expected " +
                                                std::to_string(experts_per_token));
                for (std::size_t k = 0; k < ids.size(); ++k) {
                    if (ids[k] < 0 || ids[k] >= num_experts)
                        throw std::invalid_argument("trace: expert id out of range");
                    if (k > 0 && ids[k] <= ids[k - 1])
                        throw std::invalid_argument("trace: expert ids must be sorted and distinct");
                }
            }
        }
    }
}

namespace {

// Keep the heaviest groups, renormalize to unit mass, remember coverage.
void truncate_groups(LayerStats& ls, int group_cap) {
    std::sort(ls.groups.begin(), ls.groups.end(), [](const ExpertGroup& a, const ExpertGroup& b) {
        if (a.freq != b.freq) return a.freq > b.freq;
        return a.experts < b.experts;
    });
    ls.group_coverage = 1.0;
    if (int(ls.groups.size()) > group_cap) {
        double kept = 0.0;
        for (int g = 0; g < group_cap; ++g) kept += ls.groups[std::size_t(g)].freq;
        ls.groups.resize(static_cast<std::size_t>(group_cap));
        ls.group_coverage = kept;
        if (kept > 0.0)
            for (ExpertGroup& g : ls.groups) g.freq /= kept;
    }
}

}  // namespace

TraceStats derive_stats(const ActivationTrace& trace, int group_cap) {
    if (group_cap < 1) throw std::invalid_argument("derive_stats: group_cap must be >= 1");
    trace.validate();

    const int E = trace.num_experts;
    const int L = trace.layer_count();
    const int B = trace.batch();
    const std::size_t tokens_per_layer = trace.iterations.size() * std::size_t(B);

    TraceStats stats;
    stats.num_experts = E;
    stats.experts_per_token = trace.experts_per_token;
    stats.layers.resize(static_cast<std::size_t>(L));
    stats.layer_overlap.assign(L > 1 ? std::size_t(L - 1) : 0, 0.0);

    for (int l = 0; l < L; ++l) {
        LayerStats& ls = stats.layers[std::size_t(l)];
        std::vector<std::int64_t> expert_count(std::size_t(E), 0);
        std::vector<std::vector<std::int64_t>> pair_count(std::size_t(E),
                                                          std::vector<std::int64_t>(static_cast<std::size_t>(E), 0));
        std::map<std::vector<int>, std::int64_t> group_count;

        for (const IterationTrace& iter : trace.iterations) {
            for (const TokenExperts& ids : iter.layers[std::size_t(l)]) {
                ++group_count[ids];
                for (std::size_t a = 0; a < ids.size(); ++a) {
                    ++expert_count[std::size_t(ids[a])];
                    for (std::size_t b = 0; b < ids.size(); ++b)
                        if (a != b) ++pair_count[std::size_t(ids[a])][std::size_t(ids[b])];
                }
            }
        }

        ls.freq.resize(static_cast<std::size_t>(E));
        for (int i = 0; i < E; ++i)
            ls.freq[std::size_t(i)] = double(expert_count[std::size_t(i)]) / double(tokens_per_layer);

        ls.groups.reserve(group_count.size());
        for (const auto& [ids, count] : group_count)
            ls.groups.push_back({ids, double(count) / double(tokens_per_layer)});
        truncate_groups(ls, group_cap);

        ls.affinity.assign(std::size_t(E), std::vector<double>(static_cast<std::size_t>(E), 0.0));
        for (int i = 0; i < E; ++i) {
            if (expert_count[std::size_t(i)] == 0) continue;
            ls.affinity[std::size_t(i)][std::size_t(i)] = 1.0;
            for (int j = 0; j < E; ++j) {
                if (i == j) continue;
                ls.affinity[std::size_t(i)][std::size_t(j)] =
                    double(pair_count[std::size_t(i)][std::size_t(j)]) /
                    double(expert_count[std::size_t(i)]);
            }
        }
    }

    for (int l = 0; l + 1 < L; ++l) {
        double shared = 0.0;
        for (const IterationTrace& iter : trace.iterations) {
            const LayerTokens& cur = iter.layers[std::size_t(l)];
            const LayerTokens& next = iter.layers[std::size_t(l + 1)];
            for (std::size_t t = 0; t < cur.size(); ++t) {
                const TokenExperts& a = cur[t];
                const TokenExperts& b = next[t];
                std::size_t ia = 0, ib = 0;
                while (ia < a.size() && ib < b.size()) {
                    if (a[ia] == b[ib]) { ++shared; ++ia; ++ib; }
                    else if (a[ia] < b[ib]) ++ia;
                    else ++ib;
                }
            }
        }
        stats.layer_overlap[std::size_t(l)] =
            shared / (double(tokens_per_layer) * trace.experts_per_token);
    }
    return stats;
}

LayerStats empirical_layer_stats(const LayerTokens& tokens, int num_experts) {
    LayerStats ls;
    ls.freq.assign(std::size_t(num_experts), 0.0);
    std::map<std::vector<int>, double> group_count;
    for (const TokenExperts& ids : tokens) {
        for (int i : ids) ls.freq[std::size_t(i)] += 1.0;
        group_count[ids] += 1.0;
    }
    const double inv = tokens.empty() ? 0.0 : 1.0 / double(tokens.size());
    for (double& f : ls.freq) f *= inv;
    for (const auto& [ids, count] : group_count) ls.groups.push_back({ids, count * inv});
    return ls;
}

TraceStats average_stats_across_layers(const TraceStats& stats, int group_cap) {
    if (stats.layers.empty()) throw std::invalid_argument("empty stats");
    const int E = stats.num_experts;
    const double inv_l = 1.0 / double(stats.layers.size());

    LayerStats avg;
    avg.freq.assign(std::size_t(E), 0.0);
    avg.affinity.assign(std::size_t(E), std::vector<double>(static_cast<std::size_t>(E), 0.0));
    std::map<std::vector<int>, double> group_mass;
    double coverage = 0.0;
    for (const LayerStats& ls : stats.layers) {
        for (int i = 0; i < E; ++i) {
            avg.freq[std::size_t(i)] += ls.freq[std::size_t(i)] * inv_l;
            for (int j = 0; j < E; ++j)
                avg.affinity[std::size_t(i)][std::size_t(j)] +=
                    ls.affinity[std::size_t(i)][std::size_t(j)] * inv_l;
        }
        for (const ExpertGroup& g : ls.groups) group_mass[g.experts] += g.freq * inv_l;
        coverage += ls.group_coverage * inv_l;
    }
    avg.groups.reserve(group_mass.size());
    for (const auto& [ids, mass] : group_mass) avg.groups.push_back({ids, mass});
    truncate_groups(avg, group_cap);
    avg.group_coverage *= coverage;

    TraceStats out;
    out.num_experts = stats.num_experts;
    out.experts_per_token = stats.experts_per_token;
    out.layers.assign(stats.layers.size(), avg);
    out.layer_overlap = stats.layer_overlap;
    return out;
}

}  // namespace moeplan
