// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "moeplan/trace.hpp"
#include "moeplan/types.hpp"

namespace moeplan {

// Online policy knobs. The broadcast cost model is the hop-latency /
// transmission-cost form with the expert volume expressed in h * IS units;
// beta defaults to 1/link_bandwidth and alpha to the per-hop latency.
struct DynamicPolicy {
    double prediction_accuracy = 1.0;  // a in [0,1]; 1 = oracle next-layer gate
    double alpha_s = 0.0;              // per-hop latency component
    double beta_s = 0.0;               // per-volume-unit transmission cost
    std::int64_t expert_bytes = 0;     // parameter bytes of one replica
    bool enabled = true;
    int max_broadcasts_per_layer = std::numeric_limits<int>::max();

    static DynamicPolicy defaults(const ModelSpec& model, const MeshSpec& mesh,
                                  double prediction_accuracy);
};

// Blend of the next layer's true activation frequencies with the uninformed
// uniform prior e/E; accuracy is the blending weight.
std::vector<double> predict_frequencies(const LayerTokens& next_layer_tokens,
                                        double accuracy, const ModelSpec& model);

struct PrioritySelection {
    std::vector<double> scores;  // row-major E x D: 2 * P * f_hat * IS / comp
    int expert = -1;             // arg-max score on the hottest node
    int node = -1;               // node with the highest predicted load
};

PrioritySelection priority_scores(const LayerPlacement& placement,
                                  const std::vector<double>& f_hat,
                                  const ModelSpec& model, const MeshSpec& mesh);

struct ChunkChoice {
    double chunk_size = 0.0;     // optimal broadcast chunk
    double t_pre_b_s = 0.0;      // cost at the optimal chunk
    double lower_bound_s = 0.0;  // closed-form bound; equals t_pre_b_s
};

// Broadcast cost t(c, k) = alpha*(2*sqrt(D) + V/c) + k*beta*(V + 2*c*sqrt(D))
// with V = h*IS, minimized at c* = sqrt(alpha*V / (2*beta*k*sqrt(D))).
ChunkChoice optimal_chunk(double alpha, double beta, int k, int node_count, int hidden_size,
                          int intermediate_size);

// Largest k >= 0 whose optimal-chunk broadcast cost fits inside the previous
// layer's latency; 0 disables pre-broadcast for the layer.
int broadcast_budget(double prev_layer_latency_s, const DynamicPolicy& policy,
                     int node_count, const ModelSpec& model);

struct DispatchResult {
    // per token, one (expert, node) pair per activated expert
    std::vector<std::vector<std::pair<int, int>>> assignments;
    std::vector<double> node_loads_s;
};

// Greedy replica-restricted routing: each token-expert goes to the candidate
// replica with the lowest running load (ties to the lowest node id), adding
// load_per_token_expert_s to it.
DispatchResult dispatch(const LayerTokens& tokens,
                        const std::vector<std::vector<int>>& replica_nodes,
                        std::vector<double> node_loads_s, double load_per_token_expert_s);

struct DispatchComm {
    std::vector<double> per_node_bytes;
    double t_hat_s = 0.0;
};

// Aggregation traffic of a dispatched layer. Partials flow only from static
// hosts toward each token's busiest static-host node; token-experts served by
// a pre-broadcast replica add no inter-expert traffic.
DispatchComm dispatched_comm(const DispatchResult& dispatched,
                             const LayerPlacement& static_placement, const ModelSpec& model,
                             const MeshSpec& mesh);

struct DynamicStepReport {
    int iteration = 0;
    int layer = 0;
    std::vector<int> broadcast_experts;
    int broadcasts = 0;              // k in the cost model
    double chunk_size = 0.0;
    double t_pre_b_s = 0.0;          // overlapped with the previous layer
    double t_pre_b_sim_s = 0.0;      // event-simulated cross-check
    double static_latency_s = 0.0;
    double dynamic_latency_s = 0.0;
    double static_max_load_s = 0.0;
    double dynamic_max_load_s = 0.0;
    double static_comm_hat_s = 0.0;
    double dynamic_comm_hat_s = 0.0;
    bool adopted = false;            // dispatch outcome kept over the static path
};

// Walks the trace layer by layer: budget from the previous layer's latency,
// repeated priority selection and pre-broadcast, replica-restricted dispatch,
// then latency evaluation of the augmented placement. Pre-broadcast replicas
// last for the current layer only. A step falls back to the static routing
// when the dispatch outcome does not improve the modeled latency.
std::vector<DynamicStepReport> dynamic_simulate(const ActivationTrace& trace,
                                                const Placement& static_placement,
                                                const NodeMapping& mapping,
                                                const DynamicPolicy& policy,
                                                const ModelSpec& model, const MeshSpec& mesh,
                                                double gamma);

}  // namespace moeplan
