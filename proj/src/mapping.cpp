// SPDX-License-Identifier: Apache-2.0
#include "moeplan/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "moeplan/rng.hpp"

namespace moeplan {

LayerTokens tokens_from_stats(const LayerStats& stats, int batch) {
    if (batch < 1) throw std::invalid_argument("tokens_from_stats: batch must be >= 1");
    double total = 0.0;
    for (const ExpertGroup& g : stats.groups) total += g.freq;
    if (total <= 0.0) throw std::invalid_argument("tokens_from_stats: no group mass");

    std::vector<int> count(stats.groups.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainder;
    int assigned = 0;
    for (std::size_t g = 0; g < stats.groups.size(); ++g) {
        const double exact = stats.groups[g].freq / total * batch;
        count[g] = int(exact);
        assigned += count[g];
        remainder.push_back({exact - double(count[g]), g});
    }
    std::stable_sort(remainder.begin(), remainder.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int k = 0; k < batch - assigned; ++k) ++count[remainder[std::size_t(k)].second];

    LayerTokens tokens;
    tokens.reserve(static_cast<std::size_t>(batch));
    for (std::size_t g = 0; g < stats.groups.size(); ++g)
        for (int k = 0; k < count[g]; ++k) tokens.push_back(stats.groups[g].experts);
    return tokens;
}

namespace {

std::vector<int> permutation_from_keys(const std::vector<double>& keys) {
    std::vector<int> order(keys.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return keys[std::size_t(a)] < keys[std::size_t(b)]; });
    // order[k] = logical cluster ranked k-th; physical node of cluster l is
    // the rank position of l
    std::vector<int> perm(keys.size());
    for (std::size_t k = 0; k < order.size(); ++k) perm[std::size_t(order[k])] = int(k);
    return perm;
}

int hamming(const std::vector<int>& a, const std::vector<int>& b) {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

class MappingEvaluator {
public:
    MappingEvaluator(const LayerPlacement& placement, const LayerTokens& tokens,
                     const MeshSpec& mesh, const ModelSpec& model,
                     const MappingSearchConfig& config)
        : placement_(placement), tokens_(tokens), mesh_(mesh), model_(model), config_(config) {}

    double objective(const std::vector<int>& perm, SimReport* first_report = nullptr) {
        NodeMapping mapping{perm};
        double sum = 0.0;
        for (int s = 0; s < config_.dst_samples; ++s) {
            const std::uint64_t dst_seed = splitmix64(config_.seed ^ (0x7700 + std::uint64_t(s)));
            SimReport report = simulate(build_tasks(tokens_, placement_, mapping, model_, dst_seed),
                                        mesh_, config_.chunk_bytes);
            sum += report.makespan_s;
            if (s == 0 && first_report) *first_report = std::move(report);
        }
        return sum / config_.dst_samples;
    }

private:
    const LayerPlacement& placement_;
    const LayerTokens& tokens_;
    const MeshSpec& mesh_;
    const ModelSpec& model_;
    const MappingSearchConfig& config_;
};

}  // namespace

MappingResult optimize_mapping(const LayerPlacement& placement, const LayerStats& stats,
                               const MeshSpec& mesh, const ModelSpec& model, int batch,
                               const MappingSearchConfig& config) {
    if (config.eval_budget < 1)
        throw std::invalid_argument("optimize_mapping: eval_budget must be >= 1");
    const int D = mesh.node_count();
    const LayerTokens tokens = tokens_from_stats(stats, batch);
    MappingEvaluator eval(placement, tokens, mesh, model, config);
    Rng rng = Rng::stream(config.seed, 0x6d61);

    std::map<std::vector<int>, double> seen;
    std::vector<std::pair<std::vector<int>, double>> archive;
    std::vector<int> best_perm(static_cast<std::size_t>(D));
    std::iota(best_perm.begin(), best_perm.end(), 0);
    double best_value = std::numeric_limits<double>::infinity();
    int evals = 0;

    auto evaluate = [&](const std::vector<int>& perm) -> bool {
        if (evals >= config.eval_budget) return false;
        if (seen.count(perm)) return false;
        const double value = eval.objective(perm);
        ++evals;
        seen[perm] = value;
        archive.push_back({perm, value});
        if (value < best_value) { best_value = value; best_perm = perm; }
        return true;
    };

    // identity first: the returned mapping is never worse than it
    std::vector<int> identity(static_cast<std::size_t>(D));
    std::iota(identity.begin(), identity.end(), 0);
    evaluate(identity);
    const double identity_value = best_value;

    // exhaustive when the budget covers every permutation
    double factorial = 1.0;
    for (int k = 2; k <= D; ++k) factorial *= k;
    if (factorial <= double(config.eval_budget)) {
        std::vector<int> perm = identity;
        std::sort(perm.begin(), perm.end());
        do {
            evaluate(perm);
        } while (std::next_permutation(perm.begin(), perm.end()) && evals < config.eval_budget);
    } else {
        // surrogate-guided key search over the remaining exploration share
        const int explore_budget = evals + int(0.6 * (config.eval_budget - evals));
        std::map<std::vector<int>, std::vector<double>> keys_of;
        std::vector<double> best_keys(static_cast<std::size_t>(D));
        for (int c = 0; c < D; ++c) best_keys[std::size_t(c)] = double(c) / D;

        while (evals < explore_budget) {
            std::vector<std::vector<double>> pool;
            for (int k = 0; k < 6; ++k) {
                std::vector<double> keys(static_cast<std::size_t>(D));
                for (double& v : keys) v = rng.unit();
                pool.push_back(std::move(keys));
            }
            for (int k = 0; k < 6; ++k) {
                std::vector<double> keys = best_keys;
                for (double& v : keys) v += 0.25 * rng.normal();
                pool.push_back(std::move(keys));
            }
            if (!archive.empty()) {
                for (int k = 0; k < 4; ++k) {
                    const auto& elite = archive[std::size_t(rng.below(archive.size()))];
                    auto it = keys_of.find(elite.first);
                    std::vector<double> keys =
                        it != keys_of.end() ? it->second : std::vector<double>(std::size_t(D), 0.5);
                    for (double& v : keys) v += 0.25 * rng.normal();
                    pool.push_back(std::move(keys));
                }
            }

            // rank pool by nearest-neighbor prediction minus a distance bonus
            double value_spread = 0.0;
            for (const auto& [p, v] : archive) value_spread = std::max(value_spread, v - best_value);
            std::vector<int> chosen_perm;
            std::vector<double> chosen_keys;
            double chosen_score = std::numeric_limits<double>::infinity();
            for (std::vector<double>& keys : pool) {
                std::vector<int> perm = permutation_from_keys(keys);
                if (seen.count(perm)) continue;
                std::vector<std::pair<int, double>> near;
                for (const auto& [p, v] : archive) near.push_back({hamming(perm, p), v});
                std::partial_sort(near.begin(), near.begin() + std::min<std::size_t>(3, near.size()),
                                  near.end());
                double predicted = 0.0, weight = 0.0;
                int min_dist = D;
                for (std::size_t k = 0; k < std::min<std::size_t>(3, near.size()); ++k) {
                    const double wgt = 1.0 / (1.0 + near[k].first);
                    predicted += wgt * near[k].second;
                    weight += wgt;
                    min_dist = std::min(min_dist, near[k].first);
                }
                predicted = weight > 0.0 ? predicted / weight : 0.0;
                const double score = predicted - 0.25 * value_spread * double(min_dist) / D;
                if (score < chosen_score) {
                    chosen_score = score;
                    chosen_perm = std::move(perm);
                    chosen_keys = std::move(keys);
                }
            }
            if (chosen_perm.empty()) {
                std::vector<double> keys(static_cast<std::size_t>(D));
                for (double& v : keys) v = rng.unit();
                chosen_perm = permutation_from_keys(keys);
                chosen_keys = std::move(keys);
                if (seen.count(chosen_perm)) continue;
            }
            const double prev_best = best_value;
            if (evaluate(chosen_perm)) {
                keys_of[chosen_perm] = chosen_keys;
                if (best_value < prev_best) best_keys = chosen_keys;
            }
        }

        // pairwise-swap refinement: nearby exchanges change the cost smoothly
        bool improved = true;
        while (improved && evals < config.eval_budget) {
            improved = false;
            std::vector<std::pair<int, int>> swaps;
            for (int a = 0; a < D; ++a)
                for (int b = a + 1; b < D; ++b) swaps.push_back({a, b});
            rng.shuffle(swaps);
            for (const auto& [a, b] : swaps) {
                if (evals >= config.eval_budget) break;
                std::vector<int> perm = best_perm;
                std::swap(perm[std::size_t(a)], perm[std::size_t(b)]);
                const double prev_best = best_value;
                evaluate(perm);
                if (best_value < prev_best) { improved = true; break; }
            }
        }
    }

    MappingResult result;
    result.mapping = NodeMapping{best_perm};
    result.objective_s = best_value;
    result.identity_objective_s = identity_value;
    result.evaluations = evals;
    eval.objective(best_perm, &result.report);
    return result;
}

}  // namespace moeplan
