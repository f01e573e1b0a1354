// SPDX-License-Identifier: Apache-2.0
#include "moeplan/dynamic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "moeplan/netsim.hpp"
#include "moeplan/perfmodel.hpp"

namespace moeplan {

DynamicPolicy DynamicPolicy::defaults(const ModelSpec& model, const MeshSpec& mesh,
                                      double prediction_accuracy) {
    DynamicPolicy p;
    p.prediction_accuracy = prediction_accuracy;
    p.alpha_s = mesh.per_hop_latency_s;
    p.beta_s = 1.0 / mesh.link_bandwidth_Bps;
    p.expert_bytes = expert_param_bytes(model);
    return p;
}

std::vector<double> predict_frequencies(const LayerTokens& next_layer_tokens,
                                        double accuracy, const ModelSpec& model) {
    if (accuracy < 0.0 || accuracy > 1.0)
        throw std::invalid_argument("predict_frequencies: accuracy must be in [0,1]");
    const int E = model.num_experts;
    std::vector<double> f_next(std::size_t(E), 0.0);
    for (const TokenExperts& ids : next_layer_tokens)
        for (int i : ids) f_next[std::size_t(i)] += 1.0;
    if (!next_layer_tokens.empty())
        for (double& f : f_next) f /= double(next_layer_tokens.size());
    const double uniform = double(model.experts_per_token) / double(E);
    std::vector<double> f_hat(static_cast<std::size_t>(E));
    for (int i = 0; i < E; ++i)
        f_hat[std::size_t(i)] = accuracy * f_next[std::size_t(i)] + (1.0 - accuracy) * uniform;
    return f_hat;
}

PrioritySelection priority_scores(const LayerPlacement& placement,
                                  const std::vector<double>& f_hat,
                                  const ModelSpec& model, const MeshSpec& mesh) {
    const int E = placement.num_experts;
    const int D = placement.num_nodes;
    PrioritySelection sel;
    sel.scores.assign(std::size_t(E) * std::size_t(D), 0.0);
    std::vector<double> load(std::size_t(D), 0.0);
    for (int i = 0; i < E; ++i) {
        for (int c = 0; c < D; ++c) {
            const double prio = 2.0 * placement.at(i, c) * f_hat[std::size_t(i)] *
                                model.intermediate_size / mesh.node_compute_flops;
            sel.scores[std::size_t(i) * D + std::size_t(c)] = prio;
            load[std::size_t(c)] += placement.at(i, c) * f_hat[std::size_t(i)];
        }
    }
    sel.node = 0;
    for (int c = 1; c < D; ++c)
        if (load[std::size_t(c)] > load[std::size_t(sel.node)]) sel.node = c;
    sel.expert = 0;
    for (int i = 1; i < E; ++i)
        if (sel.scores[std::size_t(i) * D + std::size_t(sel.node)] >
            sel.scores[std::size_t(sel.expert) * D + std::size_t(sel.node)])
            sel.expert = i;
    return sel;
}

namespace {

double broadcast_cost(double alpha, double beta, int k, double sqrt_d, double volume,
                      double chunk) {
    return alpha * (2.0 * sqrt_d + volume / chunk) + k * beta * (volume + 2.0 * chunk * sqrt_d);
}

double broadcast_bound(double alpha, double beta, int k, double sqrt_d, double volume) {
    return volume * beta * k + 2.0 * alpha * sqrt_d +
           2.0 * std::sqrt(2.0 * sqrt_d * beta * k * alpha * volume);
}

}  // namespace

ChunkChoice optimal_chunk(double alpha, double beta, int k, int node_count, int hidden_size,
                          int intermediate_size) {
    if (alpha <= 0.0 || beta <= 0.0 || k < 1 || node_count < 1 || hidden_size < 1 ||
        intermediate_size < 1)
        throw std::invalid_argument("optimal_chunk: inputs must be positive");
    const double volume = double(hidden_size) * double(intermediate_size);
    const double sqrt_d = std::sqrt(double(node_count));
    ChunkChoice choice;
    choice.chunk_size = std::sqrt(alpha * volume / (2.0 * beta * k * sqrt_d));
    choice.t_pre_b_s = broadcast_cost(alpha, beta, k, sqrt_d, volume, choice.chunk_size);
    choice.lower_bound_s = broadcast_bound(alpha, beta, k, sqrt_d, volume);
    return choice;
}

int broadcast_budget(double prev_layer_latency_s, const DynamicPolicy& policy,
                     int node_count, const ModelSpec& model) {
    if (prev_layer_latency_s < 0.0)
        throw std::invalid_argument("broadcast_budget: latency must be nonnegative");
    const double volume = double(model.hidden_size) * double(model.intermediate_size);
    const double sqrt_d = std::sqrt(double(node_count));
    constexpr int kScanLimit = 256;
    int k = 0;
    while (k < kScanLimit &&
           broadcast_bound(policy.alpha_s, policy.beta_s, k + 1, sqrt_d, volume) <=
               prev_layer_latency_s)
        ++k;
    return k;
}

DispatchResult dispatch(const LayerTokens& tokens,
                        const std::vector<std::vector<int>>& replica_nodes,
                        std::vector<double> node_loads_s, double load_per_token_expert_s) {
    DispatchResult result;
    result.node_loads_s = std::move(node_loads_s);
    result.assignments.reserve(tokens.size());
    for (const TokenExperts& ids : tokens) {
        std::vector<std::pair<int, int>> chosen;
        chosen.reserve(ids.size());
        for (int i : ids) {
            const std::vector<int>& candidates = replica_nodes[std::size_t(i)];
            if (candidates.empty())
                throw std::invalid_argument("unplaced expert " + std::to_string(i));
            int best = candidates[0];
            for (int node : candidates)
                if (result.node_loads_s[std::size_t(node)] <
                    result.node_loads_s[std::size_t(best)])
                    best = node;
            result.node_loads_s[std::size_t(best)] += load_per_token_expert_s;
            chosen.push_back({i, best});
        }
        result.assignments.push_back(std::move(chosen));
    }
    return result;
}

DispatchComm dispatched_comm(const DispatchResult& dispatched,
                             const LayerPlacement& static_placement, const ModelSpec& model,
                             const MeshSpec& mesh) {
    const int D = static_placement.num_nodes;
    DispatchComm out;
    out.per_node_bytes.assign(static_cast<std::size_t>(D), 0.0);
    const double partial = double(model.bytes_per_activation) * model.hidden_size;
    std::vector<int> static_count(static_cast<std::size_t>(D));
    for (const std::vector<std::pair<int, int>>& token : dispatched.assignments) {
        std::fill(static_count.begin(), static_count.end(), 0);
        for (const auto& [expert, node] : token)
            if (static_placement.active(expert, node)) ++static_count[std::size_t(node)];
        int dst = 0;
        for (int c = 1; c < D; ++c)
            if (static_count[std::size_t(c)] > static_count[std::size_t(dst)]) dst = c;
        for (int c = 0; c < D; ++c)
            if (c != dst)
                out.per_node_bytes[std::size_t(c)] += partial * static_count[std::size_t(c)];
    }
    out.t_hat_s = *std::max_element(out.per_node_bytes.begin(), out.per_node_bytes.end()) /
                  mesh.link_bandwidth_Bps;
    return out;
}

std::vector<DynamicStepReport> dynamic_simulate(const ActivationTrace& trace,
                                                const Placement& static_placement,
                                                const NodeMapping& mapping,
                                                const DynamicPolicy& policy,
                                                const ModelSpec& model, const MeshSpec& mesh,
                                                double gamma) {
    trace.validate();
    if (int(static_placement.layers.size()) != trace.layer_count())
        throw std::invalid_argument("dynamic_simulate: placement layer count must match trace");
    if (!(gamma > 0.0)) throw std::invalid_argument("dynamic_simulate: gamma must be positive");

    const int D = mesh.node_count();
    const int E = model.num_experts;
    const double load_unit =
        2.0 * model.hidden_size * model.intermediate_size / mesh.node_compute_flops;
    const double volume = double(model.hidden_size) * double(model.intermediate_size);
    const double sqrt_d = std::sqrt(double(D));

    std::vector<DynamicStepReport> steps;
    for (std::size_t it = 0; it < trace.iterations.size(); ++it) {
        double prev_latency = 0.0;
        for (int l = 0; l < trace.layer_count(); ++l) {
            const LayerTokens& tokens = trace.iterations[it].layers[std::size_t(l)];
            const LayerPlacement& static_p = static_placement.layers[std::size_t(l)];
            const LayerStats actual = empirical_layer_stats(tokens, E);

            DynamicStepReport step;
            step.iteration = int(it);
            step.layer = l;

            ComputeLoad static_comp = compute_time(static_p, actual, double(tokens.size()),
                                                   model, mesh);
            CommEstimate static_comm =
                comm_estimate(static_p, actual, double(tokens.size()), model, mesh);
            step.static_max_load_s = static_comp.max_s;
            step.static_comm_hat_s = static_comm.t_hat_s;
            step.static_latency_s = static_comp.max_s + 2.0 * gamma * static_comm.t_hat_s;

            if (!policy.enabled) {
                step.dynamic_latency_s = step.static_latency_s;
                step.dynamic_max_load_s = step.static_max_load_s;
                step.dynamic_comm_hat_s = step.static_comm_hat_s;
                prev_latency = step.dynamic_latency_s;
                steps.push_back(std::move(step));
                continue;
            }

            const std::vector<double> f_hat =
                predict_frequencies(tokens, policy.prediction_accuracy, model);

            const int budget = broadcast_budget(prev_latency, policy, D, model);
            const int k = std::min(budget, policy.max_broadcasts_per_layer);

            // repeated hotspot selection; already-broadcast experts count as
            // evenly spread when re-ranking node loads
            std::vector<bool> broadcast(std::size_t(E), false);
            for (int round = 0; round < k; ++round) {
                LayerPlacement effective = static_p;
                for (int i = 0; i < E; ++i) {
                    if (!broadcast[std::size_t(i)]) continue;
                    for (int c = 0; c < D; ++c) effective.at(i, c) = 1.0 / D;
                }
                PrioritySelection sel = priority_scores(effective, f_hat, model, mesh);
                int pick = -1;
                double pick_score = 0.0;
                for (int i = 0; i < E; ++i) {
                    if (broadcast[std::size_t(i)]) continue;
                    const double s = sel.scores[std::size_t(i) * D + std::size_t(sel.node)];
                    if (s > pick_score) { pick_score = s; pick = i; }
                }
                if (pick < 0) break;
                broadcast[std::size_t(pick)] = true;
                step.broadcast_experts.push_back(pick);
            }
            step.broadcasts = int(step.broadcast_experts.size());
            if (step.broadcasts > 0) {
                ChunkChoice choice;
                if (policy.alpha_s > 0.0 && policy.beta_s > 0.0) {
                    choice = optimal_chunk(policy.alpha_s, policy.beta_s, step.broadcasts, D,
                                           model.hidden_size, model.intermediate_size);
                } else {
                    choice.chunk_size = volume;
                    choice.t_pre_b_s = broadcast_bound(policy.alpha_s, policy.beta_s,
                                                       step.broadcasts, sqrt_d, volume);
                    choice.lower_bound_s = choice.t_pre_b_s;
                }
                step.chunk_size = choice.chunk_size;
                step.t_pre_b_s = choice.t_pre_b_s;

                // event-simulated cross-check of the overlapped broadcast
                std::vector<CommTask> bcast_tasks;
                int id = 0;
                for (int x : step.broadcast_experts) {
                    const int src = mapping.physical(static_p.dominant_node(x));
                    for (int c = 0; c < D; ++c) {
                        if (c == src) continue;
                        bcast_tasks.push_back(
                            CommTask{id++, src, c, std::int64_t(volume), 0.0});
                    }
                }
                const std::int64_t chunk =
                    std::max<std::int64_t>(1, std::int64_t(std::llround(step.chunk_size)));
                step.t_pre_b_sim_s = simulate(bcast_tasks, mesh, chunk).makespan_s;
            }

            std::vector<std::vector<int>> replicas(static_cast<std::size_t>(E));
            std::vector<int> all_nodes(static_cast<std::size_t>(D));
            std::iota(all_nodes.begin(), all_nodes.end(), 0);
            for (int i = 0; i < E; ++i)
                replicas[std::size_t(i)] =
                    broadcast[std::size_t(i)] ? all_nodes : static_p.active_nodes(i);

            DispatchResult dispatched =
                dispatch(tokens, replicas, std::vector<double>(std::size_t(D), 0.0), load_unit);
            const double dyn_comp = *std::max_element(dispatched.node_loads_s.begin(),
                                                      dispatched.node_loads_s.end());
            const double dyn_comm = dispatched_comm(dispatched, static_p, model, mesh).t_hat_s;
            const double dyn_latency = dyn_comp + 2.0 * gamma * dyn_comm;

            step.dynamic_max_load_s = dyn_comp;
            step.dynamic_comm_hat_s = dyn_comm;
            step.adopted = dyn_latency < step.static_latency_s;
            step.dynamic_latency_s = step.adopted ? dyn_latency : step.static_latency_s;
            prev_latency = step.dynamic_latency_s;
            steps.push_back(std::move(step));
        }
    }
    return steps;
}

}  // namespace moeplan
