// SPDX-License-Identifier: Apache-2.0
#include "moeplan/perfmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace moeplan {

ComputeLoad compute_time(const LayerPlacement& placement, const LayerStats& stats,
                         double batch, const ModelSpec& model, const MeshSpec& mesh) {
    const int D = placement.num_nodes;
    const double flops_per_token = 2.0 * model.hidden_size * model.intermediate_size;
    ComputeLoad load;
    load.per_node_s.assign(std::size_t(D), 0.0);
    for (int c = 0; c < D; ++c) {
        double tokens = 0.0;
        for (int i = 0; i < placement.num_experts; ++i)
            tokens += placement.at(i, c) * stats.freq[std::size_t(i)] * batch;
        load.per_node_s[std::size_t(c)] = tokens * flops_per_token / mesh.node_compute_flops;
    }
    load.max_s = *std::max_element(load.per_node_s.begin(), load.per_node_s.end());
    return load;
}

CommEstimate comm_estimate(const LayerPlacement& placement, const LayerStats& stats,
                           double batch, const ModelSpec& model, const MeshSpec& mesh) {
    const int D = placement.num_nodes;
    const double bytes_per_group_token = double(model.bytes_per_activation) * model.hidden_size;
    CommEstimate est;
    est.per_node_bytes.assign(std::size_t(D), 0.0);
    for (const ExpertGroup& g : stats.groups) {
        const double group_bytes = g.freq * batch * bytes_per_group_token;
        for (int c = 0; c < D; ++c) {
            bool any_hosted = false;
            bool fully_local = true;
            for (int i : g.experts) {
                if (placement.active(i, c)) any_hosted = true;
                if (placement.at(i, c) < 1.0 - kPlaceEpsilon) fully_local = false;
            }
            if (any_hosted && !fully_local)
                est.per_node_bytes[std::size_t(c)] += group_bytes;
        }
    }
    const double max_bytes =
        *std::max_element(est.per_node_bytes.begin(), est.per_node_bytes.end());
    est.t_hat_s = max_bytes / mesh.link_bandwidth_Bps;
    return est;
}

GammaFit calibrate_gamma(const std::vector<std::pair<double, double>>& samples) {
    if (samples.size() < 2)
        throw std::invalid_argument("calibrate_gamma: need at least 2 samples");
    double sum_xy = 0.0, sum_xx = 0.0, sum_y = 0.0;
    for (const auto& [x, y] : samples) {
        sum_xy += x * y;
        sum_xx += x * x;
        sum_y += y;
    }
    if (sum_xx <= 0.0) throw std::invalid_argument("degenerate calibration set");

    GammaFit fit;
    fit.gamma = sum_xy / sum_xx;
    fit.sample_count = int(samples.size());
    const double mean_y = sum_y / double(samples.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& [x, y] : samples) {
        const double r = y - fit.gamma * x;
        ss_res += r * r;
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    fit.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    return fit;
}

double ring_allreduce_time(double batch, int hidden_size, const MeshSpec& mesh,
                           int bytes_per_activation) {
    if (batch <= 0.0 || hidden_size < 1 || bytes_per_activation < 1)
        throw std::invalid_argument("ring_allreduce_time: inputs must be positive");
    return double(bytes_per_activation) * batch * hidden_size / mesh.link_bandwidth_Bps;
}

double compute_comm_ratio(const ModelSpec& model, const MeshSpec& mesh, int node_count) {
    if (node_count < 1) throw std::invalid_argument("compute_comm_ratio: node_count must be >= 1");
    return mesh.link_bandwidth_Bps * model.intermediate_size * model.experts_per_token /
           (2.0 * node_count * mesh.node_compute_flops);
}

double node_load_cap(const ModelSpec& model, const MeshSpec& mesh, int node_count) {
    const double ratio = compute_comm_ratio(model, mesh, node_count);
    return (1.0 / ratio + 1.0) * double(model.experts_per_token) / double(node_count);
}

LatencyBreakdown node_overhead(const LayerPlacement& placement, const LayerStats& stats,
                               double batch, const ModelSpec& model, const MeshSpec& mesh,
                               double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("node_overhead: gamma must be positive");
    LatencyBreakdown b;
    ComputeLoad comp = compute_time(placement, stats, batch, model, mesh);
    CommEstimate comm = comm_estimate(placement, stats, batch, model, mesh);
    b.t_comp_s = comp.max_s;
    b.t_comm_hat_s = comm.t_hat_s;
    b.t_comm_s = gamma * comm.t_hat_s;
    b.t_node_overhead_s = b.t_comp_s + 2.0 * b.t_comm_s;
    b.per_node_compute_s = std::move(comp.per_node_s);
    b.per_node_send_bytes = std::move(comm.per_node_bytes);
    return b;
}

}  // namespace moeplan
