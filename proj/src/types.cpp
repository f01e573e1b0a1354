// SPDX-License-Identifier: Apache-2.0
#include "moeplan/types.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace moeplan {

std::vector<std::string> MeshSpec::validate() const {
    std::vector<std::string> v;
    if (rows < 1) v.push_back("rows must be >= 1");
    if (cols < 1) v.push_back("cols must be >= 1");
    if (!(link_bandwidth_Bps > 0.0)) v.push_back("link_bandwidth_Bps must be positive");
    if (per_hop_latency_s < 0.0) v.push_back("per_hop_latency_s must be nonnegative");
    if (!(node_compute_flops > 0.0)) v.push_back("node_compute_flops must be positive");
    if (node_memory_bytes && *node_memory_bytes <= 0)
        v.push_back("node_memory_bytes must be positive when given");
    return v;
}

std::vector<std::string> ModelSpec::validate() const {
    std::vector<std::string> v;
    if (num_experts < 1) v.push_back("num_experts must be >= 1");
    if (experts_per_token < 1 || experts_per_token > num_experts)
        v.push_back("experts_per_token must be in [1, num_experts]");
    if (hidden_size < 1) v.push_back("hidden_size must be >= 1");
    if (intermediate_size < 1) v.push_back("intermediate_size must be >= 1");
    if (num_layers < 1) v.push_back("num_layers must be >= 1");
    if (bytes_per_activation < 1) v.push_back("bytes_per_activation must be >= 1");
    return v;
}

ModelSpec model_preset(const std::string& name) {
    if (name == "mixtral") return ModelSpec{8, 2, 4096, 14336, 32, 4};
    if (name == "deepseek") return ModelSpec{64, 6, 2048, 1408, 27, 4};
    if (name == "qwen") return ModelSpec{64, 8, 3584, 2560, 28, 4};
    throw std::invalid_argument("unknown model preset: " + name);
}

bool is_model_preset(const std::string& name) {
    return name == "mixtral" || name == "deepseek" || name == "qwen";
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::TP: return "TP";
        case Strategy::EP: return "EP";
        case Strategy::HybridCB: return "HYBRID_CB";
        case Strategy::NodeBalance: return "NODE_BALANCE";
        case Strategy::NodeLinkBalance: return "NODE_LINK_BALANCE";
        case Strategy::Custom: return "CUSTOM";
    }
    return "CUSTOM";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "TP") return Strategy::TP;
    if (s == "EP") return Strategy::EP;
    if (s == "HYBRID_CB") return Strategy::HybridCB;
    if (s == "NODE_BALANCE") return Strategy::NodeBalance;
    if (s == "NODE_LINK_BALANCE") return Strategy::NodeLinkBalance;
    if (s == "CUSTOM") return Strategy::Custom;
    throw std::invalid_argument("unknown strategy tag: " + s);
}

std::vector<int> LayerPlacement::active_nodes(int expert) const {
    std::vector<int> nodes;
    for (int c = 0; c < num_nodes; ++c)
        if (active(expert, c)) nodes.push_back(c);
    return nodes;
}

int LayerPlacement::dominant_node(int expert) const {
    int best = 0;
    double best_share = at(expert, 0);
    for (int c = 1; c < num_nodes; ++c) {
        if (at(expert, c) > best_share) {
            best_share = at(expert, c);
            best = c;
        }
    }
    return best;
}

NodeMapping NodeMapping::identity(int node_count) {
    NodeMapping m;
    m.to_physical.resize(static_cast<std::size_t>(node_count));
    std::iota(m.to_physical.begin(), m.to_physical.end(), 0);
    return m;
}

bool NodeMapping::is_bijection() const {
    std::vector<bool> seen(to_physical.size(), false);
    for (int p : to_physical) {
        if (p < 0 || p >= int(to_physical.size()) || seen[std::size_t(p)]) return false;
        seen[std::size_t(p)] = true;
    }
    return true;
}

std::vector<std::string> validate_placement(const Placement& placement,
                                            const ModelSpec& model,
                                            const MeshSpec& mesh) {
    constexpr double kRowTol = 1e-9;
    std::vector<std::string> violations;
    const int expected_nodes = mesh.node_count();
    for (std::size_t l = 0; l < placement.layers.size(); ++l) {
        const LayerPlacement& lp = placement.layers[l];
        if (lp.num_experts != model.num_experts || lp.num_nodes != expected_nodes ||
            lp.shares.size() != std::size_t(lp.num_experts) * std::size_t(lp.num_nodes)) {
            violations.push_back("layer " + std::to_string(l) + ": dimension mismatch (expected " +
                                 std::to_string(model.num_experts) + "x" +
                                 std::to_string(expected_nodes) + ")");
            continue;
        }
        for (int i = 0; i < lp.num_experts; ++i) {
            double row_sum = 0.0;
            for (int c = 0; c < lp.num_nodes; ++c) {
                double p = lp.at(i, c);
                if (p < -kRowTol || p > 1.0 + kRowTol) {
                    violations.push_back("layer " + std::to_string(l) + ": entry out of [0,1] for expert " +
                                         std::to_string(i) + " node " + std::to_string(c));
                }
                row_sum += p;
            }
            if (std::abs(row_sum - 1.0) > kRowTol) {
                violations.push_back("layer " + std::to_string(l) + ": row sum != 1 for expert " +
                                     std::to_string(i));
            }
        }
        if (mesh.node_memory_bytes) {
            const std::int64_t per_expert = expert_param_bytes(model);
            for (int c = 0; c < lp.num_nodes; ++c) {
                std::int64_t used = 0;
                for (int i = 0; i < lp.num_experts; ++i)
                    if (lp.active(i, c)) used += per_expert;
                if (used > *mesh.node_memory_bytes) {
                    violations.push_back("layer " + std::to_string(l) + ": node " + std::to_string(c) +
                                         " exceeds memory budget (" + std::to_string(used) + " > " +
                                         std::to_string(*mesh.node_memory_bytes) + " bytes)");
                }
            }
        }
    }
    return violations;
}

std::int64_t expert_param_bytes(const ModelSpec& model, int bytes_per_weight) {
    return 3LL * model.hidden_size * model.intermediate_size * bytes_per_weight;
}

}  // namespace moeplan
