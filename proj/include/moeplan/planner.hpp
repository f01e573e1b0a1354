// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "moeplan/perfmodel.hpp"
#include "moeplan/trace.hpp"
#include "moeplan/types.hpp"

namespace moeplan {

// Every expert split evenly across all nodes. Communication for this
// placement is costed as one ring all-reduce per layer, not through the
// all-to-all estimator.
Placement baseline_tp(const ModelSpec& model, int node_count, int num_layers);

// Whole experts assigned greedily: experts sorted by activation frequency
// descending, each placed on the node with the lowest accumulated load.
Placement baseline_ep(const ModelSpec& model, int node_count, const TraceStats& stats);

// Mesh tiled into num_regions contiguous rectangles; whole experts assigned
// to regions by the same greedy rule, then split evenly inside their region.
std::pair<Placement, NodeMapping> baseline_hybrid_cb(const ModelSpec& model,
                                                     const MeshSpec& mesh,
                                                     const TraceStats& stats,
                                                     int num_regions);

// One layer of the placement optimization problem.
struct NodeBalanceProblem {
    LayerStats stats;
    double batch = 1.0;
    ModelSpec model;
    MeshSpec mesh;
    double gamma = 1.0;
    int local_search_budget = 150;  // LP evaluations spent on improvement moves
    std::uint64_t seed = 0;
};

enum class SolveStatus { Optimal, Feasible, Fallback };

std::string to_string(SolveStatus s);

struct SolveReport {
    LayerPlacement placement;
    double objective_s = 0.0;        // linearized objective of the returned placement
    double relaxation_bound_s = 0.0; // lower bound from the continuous relaxation
    SolveStatus status = SolveStatus::Feasible;
    double wall_time_s = 0.0;
    std::string sub_solver = "simplex";
    std::vector<std::string> notes;
};

// Objective used throughout the node-balance stage: max-node compute time
// plus 2 * gamma * the per-node linearized communication bound, where every
// active expert of a group counts once per activation.
double linearized_objective(const LayerPlacement& placement, const LayerStats& stats,
                            double batch, const ModelSpec& model, const MeshSpec& mesh,
                            double gamma);

// Relax-round-repair plus budgeted local search over activity patterns.
// Baseline activity patterns are always evaluated as candidates, so the
// result is never worse than a cap-feasible TP/EP/hybrid placement under the
// linearized objective.
SolveReport solve_node_balance(const NodeBalanceProblem& problem);

// Ground truth on tiny instances: enumerate every activity pattern
// (num_experts * num_nodes <= 12) and solve the share program for each.
SolveReport brute_force_node_balance(const NodeBalanceProblem& problem);

// Convenience wrapper running an independent solve per layer.
Placement solve_node_balance_placement(const TraceStats& stats, double batch,
                                       const ModelSpec& model, const MeshSpec& mesh,
                                       double gamma, int local_search_budget,
                                       std::uint64_t seed,
                                       std::vector<SolveReport>* reports = nullptr);

}  // namespace moeplan
