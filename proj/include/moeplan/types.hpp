// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace moeplan {

// Threshold below which a placement share counts as "not placed". LP solvers
// emit tiny nonzeros; anything above this activates the expert on the node.
inline constexpr double kPlaceEpsilon = 1e-9;

// 2D-mesh accelerator description. Coordinates are (x = column, y = row);
// node ids are row-major: id = y * cols + x.
struct MeshSpec {
    int rows = 1;
    int cols = 1;
    double link_bandwidth_Bps = 1.0;   // bytes per second per directed link
    double per_hop_latency_s = 0.0;    // seconds added per traversed link
    double node_compute_flops = 1.0;   // FLOP/s per node
    std::optional<std::int64_t> node_memory_bytes;

    int node_count() const { return rows * cols; }
    // Empty when valid, otherwise a list of violated constraints.
    std::vector<std::string> validate() const;
};

// MoE model dimensions for the expert FFN layers.
struct ModelSpec {
    int num_experts = 1;         // E
    int experts_per_token = 1;   // e, 1 <= e <= E
    int hidden_size = 1;         // h
    int intermediate_size = 1;   // IS
    int num_layers = 1;          // L
    int bytes_per_activation = 4;

    std::vector<std::string> validate() const;
};

// Built-in model presets: "mixtral", "deepseek", "qwen".
ModelSpec model_preset(const std::string& name);
bool is_model_preset(const std::string& name);

enum class Strategy {
    TP,
    EP,
    HybridCB,
    NodeBalance,
    NodeLinkBalance,
    Custom,
};

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

// Per-layer E x D matrix of placement fractions. The activity indicator is
// derived: an expert is active on a node iff its share exceeds kPlaceEpsilon.
struct LayerPlacement {
    int num_experts = 0;
    int num_nodes = 0;
    std::vector<double> shares;  // row-major E x D

    LayerPlacement() = default;
    LayerPlacement(int experts, int nodes)
        : num_experts(experts), num_nodes(nodes),
          shares(std::size_t(experts) * std::size_t(nodes), 0.0) {}

    double at(int expert, int node) const {
        return shares[std::size_t(expert) * num_nodes + node];
    }
    double& at(int expert, int node) {
        return shares[std::size_t(expert) * num_nodes + node];
    }
    bool active(int expert, int node) const { return at(expert, node) > kPlaceEpsilon; }

    // Nodes with a nonzero share of the expert, ascending.
    std::vector<int> active_nodes(int expert) const;
    // Node holding the largest share (ties to the lowest node id).
    int dominant_node(int expert) const;
};

struct Placement {
    Strategy strategy = Strategy::Custom;
    std::vector<LayerPlacement> layers;
};

// Bijection logical cluster id -> physical node id.
struct NodeMapping {
    std::vector<int> to_physical;

    static NodeMapping identity(int node_count);
    int physical(int logical) const { return to_physical[std::size_t(logical)]; }
    int size() const { return int(to_physical.size()); }
    bool is_bijection() const;
};

// Checks every placement invariant (dimensions, row sums, share range, and
// the optional per-node memory budget counted in whole experts). Returns the
// list of violations; empty means valid. Never mutates the input.
std::vector<std::string> validate_placement(const Placement& placement,
                                            const ModelSpec& model,
                                            const MeshSpec& mesh);

// Parameter bytes of one expert (gate/up/down projections).
std::int64_t expert_param_bytes(const ModelSpec& model, int bytes_per_weight = 4);

}  // namespace moeplan
