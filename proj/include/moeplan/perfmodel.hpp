// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "moeplan/trace.hpp"
#include "moeplan/types.hpp"

namespace moeplan {

struct ComputeLoad {
    std::vector<double> per_node_s;  // length D
    double max_s = 0.0;
};

struct CommEstimate {
    std::vector<double> per_node_bytes;  // length D
    double t_hat_s = 0.0;                // max per-node volume / link bandwidth
};

// Through-origin linear fit of simulated vs. estimated communication time.
struct GammaFit {
    double gamma = 1.0;
    double r_squared = 0.0;
    int sample_count = 0;
};

struct LatencyBreakdown {
    double t_comp_s = 0.0;
    double t_comm_hat_s = 0.0;       // linear estimate
    double t_comm_s = 0.0;           // gamma-scaled estimate
    double t_node_overhead_s = 0.0;  // t_comp + 2 * t_comm
    std::vector<double> per_node_compute_s;
    std::vector<double> per_node_send_bytes;
};

// Per-node compute seconds for one layer: node c spends
// sum_i P[i][c] * f_i * B tokens worth of 2*h*IS FLOPs.
ComputeLoad compute_time(const LayerPlacement& placement, const LayerStats& stats,
                         double batch, const ModelSpec& model, const MeshSpec& mesh);

// Node-traffic estimate of the all-to-all aggregation step. A node sends the
// partial results of group g (f_g * B tokens of h activations) iff it hosts
// any expert of g and does not host the entire group exclusively.
CommEstimate comm_estimate(const LayerPlacement& placement, const LayerStats& stats,
                           double batch, const ModelSpec& model, const MeshSpec& mesh);

// Through-origin least squares gamma = sum(x*y) / sum(x^2) with the
// conventional mean-centered R^2. Throws if every estimate is zero.
GammaFit calibrate_gamma(const std::vector<std::pair<double, double>>& samples);

// One direction of a ring all-reduce over a B x h activation tensor.
double ring_allreduce_time(double batch, int hidden_size, const MeshSpec& mesh,
                           int bytes_per_activation);

// Compute-to-communication ratio used to cap per-node load.
double compute_comm_ratio(const ModelSpec& model, const MeshSpec& mesh, int node_count);
// Right-hand side of the per-node load cap: (1/ratio + 1) * e / D.
double node_load_cap(const ModelSpec& model, const MeshSpec& mesh, int node_count);

// Full breakdown: t_comp + 2 * gamma * t_hat plus per-node vectors.
LatencyBreakdown node_overhead(const LayerPlacement& placement, const LayerStats& stats,
                               double batch, const ModelSpec& model, const MeshSpec& mesh,
                               double gamma);

}  // namespace moeplan
