// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "moeplan/netsim.hpp"
#include "moeplan/trace.hpp"
#include "moeplan/types.hpp"

namespace moeplan {

struct MappingResult {
    NodeMapping mapping;
    double objective_s = 0.0;           // mean simulated makespan of the winner
    double identity_objective_s = 0.0;  // same objective for the identity mapping
    SimReport report;                   // simulation of the winner, first sampling seed
    int evaluations = 0;
};

struct MappingSearchConfig {
    int eval_budget = 200;
    std::uint64_t seed = 0;
    int dst_samples = 3;              // seeded destination drawings averaged per mapping
    std::int64_t chunk_bytes = 4096;
};

// Reconstructs a token population of the given batch size from the layer's
// group distribution (largest-remainder rounding).
LayerTokens tokens_from_stats(const LayerStats& stats, int batch);

// Searches permutations of logical cluster -> physical node to minimize the
// simulated makespan of the layer's aggregation traffic. Mappings are encoded
// as random keys (sort order gives the permutation); proposals are ranked by
// a nearest-neighbor surrogate before simulation, followed by pairwise-swap
// hill climbing. The identity mapping is evaluated first, so the result never
// loses to it. Exhaustive when the budget covers all permutations.
MappingResult optimize_mapping(const LayerPlacement& placement, const LayerStats& stats,
                               const MeshSpec& mesh, const ModelSpec& model, int batch,
                               const MappingSearchConfig& config);

}  // namespace moeplan
