// SPDX-License-Identifier: Apache-2.0
#include "moeplan/tracegen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "moeplan/rng.hpp"

namespace moeplan {

void TraceGenConfig::validate() const {
    for (const std::string& v : model.validate())
        throw std::invalid_argument("trace config: " + v);
    if (batch < 1) throw std::invalid_argument("trace config: batch must be >= 1");
    if (iterations < 1) throw std::invalid_argument("trace config: iterations must be >= 1");
    if (skew < 0.0) throw std::invalid_argument("trace config: skew must be nonnegative");
    auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in_unit(affinity_strength) || !in_unit(layer_locality) || !in_unit(drift))
        throw std::invalid_argument("trace config: probabilities must be in [0,1]");
}

namespace {

// Zipf weights over ranks: w_r = 1 / (r+1)^skew.
std::vector<double> zipf_weights(int count, double skew) {
    std::vector<double> w(static_cast<std::size_t>(count));
    for (int r = 0; r < count; ++r) w[std::size_t(r)] = std::pow(double(r + 1), -skew);
    return w;
}

// Pairing permutation used to plant co-activation blocks: partner(i) != i.
std::vector<int> partner_table(int num_experts, Rng& rng) {
    std::vector<int> perm(static_cast<std::size_t>(num_experts));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<int> partner(static_cast<std::size_t>(num_experts));
    for (int k = 0; k < num_experts; ++k) {
        int a = perm[std::size_t(k)];
        int b = perm[std::size_t((k + 1) % num_experts)];
        partner[std::size_t(a)] = (num_experts == 1) ? a : b;
    }
    return partner;
}

}  // namespace

ActivationTrace generate_trace(const TraceGenConfig& cfg) {
    cfg.validate();
    const int E = cfg.model.num_experts;
    const int e = cfg.model.experts_per_token;
    const int L = cfg.model.num_layers;

    // Per-layer structure is fixed across iterations: the hot ranking and the
    // partner table depend on (seed, layer) only; drift rotates the ranking.
    std::vector<std::vector<int>> base_rank(static_cast<std::size_t>(L));
    std::vector<std::vector<int>> partners(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
        Rng layer_rng = Rng::stream(cfg.seed, 0x10000u + std::uint64_t(l));
        base_rank[std::size_t(l)].resize(static_cast<std::size_t>(E));
        std::iota(base_rank[std::size_t(l)].begin(), base_rank[std::size_t(l)].end(), 0);
        layer_rng.shuffle(base_rank[std::size_t(l)]);
        partners[std::size_t(l)] = partner_table(E, layer_rng);
    }
    const std::vector<double> rank_weight = zipf_weights(E, cfg.skew);
    const int rotate_step = int(std::llround(cfg.drift * E));

    ActivationTrace trace;
    trace.num_experts = E;
    trace.experts_per_token = e;
    trace.iterations.resize(static_cast<std::size_t>(cfg.iterations));

    for (int it = 0; it < cfg.iterations; ++it) {
        Rng rng = Rng::stream(cfg.seed, 0x20000u + std::uint64_t(it));
        IterationTrace& iter = trace.iterations[std::size_t(it)];
        iter.layers.assign(std::size_t(L), LayerTokens(static_cast<std::size_t>(cfg.batch)));

        // expert weights per layer for this iteration, after drift rotation
        std::vector<std::vector<double>> weight(
            static_cast<std::size_t>(L), std::vector<double>(static_cast<std::size_t>(E)));
        for (int l = 0; l < L; ++l) {
            for (int r = 0; r < E; ++r) {
                int rotated = (r + rotate_step * it) % E;
                int expert = base_rank[std::size_t(l)][std::size_t(rotated)];
                weight[std::size_t(l)][std::size_t(expert)] = rank_weight[std::size_t(r)];
            }
        }

        for (int t = 0; t < cfg.batch; ++t) {
            for (int l = 0; l < L; ++l) {
                TokenExperts& out = iter.layers[std::size_t(l)][std::size_t(t)];
                if (l > 0 && rng.unit() < cfg.layer_locality) {
                    out = iter.layers[std::size_t(l - 1)][std::size_t(t)];
                    continue;
                }
                std::vector<double> w = weight[std::size_t(l)];
                std::vector<int> picked;
                picked.reserve(static_cast<std::size_t>(e));
                int last = -1;
                while (int(picked.size()) < e) {
                    int next = -1;
                    if (last >= 0 && rng.unit() < cfg.affinity_strength) {
                        int cand = partners[std::size_t(l)][std::size_t(last)];
                        if (w[std::size_t(cand)] > 0.0) next = cand;
                    }
                    if (next < 0) next = int(rng.sample_discrete(w));
                    picked.push_back(next);
                    w[std::size_t(next)] = 0.0;  // without replacement
                    last = next;
                }
                std::sort(picked.begin(), picked.end());
                out = std::move(picked);
            }
        }
    }
    return trace;
}

}  // namespace moeplan
