// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moeplan/types.hpp"

namespace moeplan {

// Expert ids activated by one token, sorted ascending, exactly e distinct ids.
using TokenExperts = std::vector<int>;
// One layer of one iteration: B token activation sets.
using LayerTokens = std::vector<TokenExperts>;

struct IterationTrace {
    std::vector<LayerTokens> layers;
};

// Per-token expert routing decisions for a batch replayed over iterations.
// All iterations share the same batch size and layer count.
struct ActivationTrace {
    int num_experts = 0;
    int experts_per_token = 0;
    std::vector<IterationTrace> iterations;

    int layer_count() const {
        return iterations.empty() ? 0 : int(iterations[0].layers.size());
    }
    int batch() const {
        return (iterations.empty() || iterations[0].layers.empty())
                   ? 0
                   : int(iterations[0].layers[0].size());
    }
    // Throws std::invalid_argument on the first violated invariant.
    void validate() const;
};

struct ExpertGroup {
    std::vector<int> experts;  // sorted ascending
    double freq = 0.0;         // fraction of tokens activating exactly this set
};

struct LayerStats {
    std::vector<double> freq;                    // f_i, length E; sums to e
    std::vector<ExpertGroup> groups;             // frequencies sum to 1 after truncation
    double group_coverage = 1.0;                 // retained mass before renormalization
    std::vector<std::vector<double>> affinity;   // E x E conditional co-activation
};

struct TraceStats {
    int num_experts = 0;
    int experts_per_token = 0;
    std::vector<LayerStats> layers;
    // Mean |S_l  intersect  S_l+1| / e between adjacent layers, length L-1.
    std::vector<double> layer_overlap;
};

// Aggregates per-layer activation statistics over every iteration of the
// trace. When a layer has more distinct groups than group_cap, the top
// group_cap groups by frequency are kept and rescaled to sum to 1; the
// retained pre-truncation mass is recorded as group_coverage.
TraceStats derive_stats(const ActivationTrace& trace, int group_cap = 1024);

// Variant resolving the per-layer vs. trace-averaged frequency question:
// every layer gets the same frequency vector and group set, averaged across
// layers. Layer overlap is preserved.
TraceStats average_stats_across_layers(const TraceStats& stats, int group_cap = 1024);

// Statistics of a single batch of tokens (one iteration, one layer), without
// truncation.
LayerStats empirical_layer_stats(const LayerTokens& tokens, int num_experts);

}  // namespace moeplan
