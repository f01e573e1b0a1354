// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "moeplan/dynamic.hpp"
#include "moeplan/mapping.hpp"
#include "moeplan/netsim.hpp"
#include "moeplan/perfmodel.hpp"
#include "moeplan/planner.hpp"
#include "moeplan/trace.hpp"
#include "moeplan/types.hpp"

namespace moeplan {

// "RxC" mesh shape, e.g. "4x4".
std::pair<int, int> parse_mesh_shape(const std::string& text);
// "<tflops>TF:<GBps>GBps[:<alpha_ns>ns]", e.g. "5TF:50GBps:100ns".
// alpha defaults to 100 ns when omitted.
MeshSpec parse_hardware(const std::string& mesh_shape, const std::string& hw);
// Preset name or a JSON model file.
ModelSpec resolve_model(const std::string& name_or_path);

struct CalibrationConfig {
    int samples = 50;
    std::uint64_t seed = 0;
    int threads = 1;
    std::int64_t chunk_bytes = 4096;
};

struct CalibrationResult {
    GammaFit fit;
    std::vector<std::pair<double, double>> samples;  // (estimate, simulated)
};

// Draws seeded random placements, pairs the linear estimate with the
// event-simulated makespan of the same traffic, and fits gamma.
CalibrationResult calibrate_pipeline(const ActivationTrace& trace, const ModelSpec& model,
                                     const MeshSpec& mesh, const CalibrationConfig& config);

// One seeded random placement layer used by the calibration sweep.
LayerPlacement random_placement_layer(const ModelSpec& model, int node_count,
                                      std::uint64_t seed);

struct CompareOptions {
    std::vector<Strategy> strategies;
    double gamma = 0.0;  // <= 0 triggers calibration
    std::uint64_t seed = 0;
    int mapping_budget = 200;
    int solver_budget = 150;
    int hybrid_regions = 0;  // 0 = preset default (2 for small E, 8 otherwise)
    int threads = 1;
    std::int64_t chunk_bytes = 4096;
};

struct StrategyOutcome {
    Strategy strategy = Strategy::Custom;
    bool cap_feasible = true;
    double t_comp_s = 0.0;
    double t_comm_model_s = 0.0;  // per-direction, gamma-scaled (ring for TP)
    double t_comm_sim_s = 0.0;    // per-direction, event-simulated
    double latency_model_s = 0.0;
    double latency_sim_s = 0.0;
    double normalized_tbt_model = 0.0;
    double normalized_tbt_sim = 0.0;
    double linearized_objective_s = 0.0;  // summed over layers
    Placement placement;
    NodeMapping mapping;
};

struct CompareResult {
    double gamma = 1.0;
    std::vector<StrategyOutcome> rows;
};

// Plans, evaluates analytically, and simulates every listed strategy on the
// same trace; latencies are normalized against the TP row. Needs at least two
// strategies.
CompareResult run_compare(const ActivationTrace& trace, const ModelSpec& model,
                          const MeshSpec& mesh, const CompareOptions& options);

// Evaluation of one placement used by compare and by the planning CLI.
StrategyOutcome evaluate_placement(const ActivationTrace& trace, const TraceStats& stats,
                                   const Placement& placement, const NodeMapping& mapping,
                                   const ModelSpec& model, const MeshSpec& mesh, double gamma,
                                   std::uint64_t seed, std::int64_t chunk_bytes);

// True when every layer's per-node load stays within the node-balance cap.
bool satisfies_load_cap(const Placement& placement, const TraceStats& stats,
                        const ModelSpec& model, const MeshSpec& mesh);

// CSV emitters behind the report command; they return the written path.
std::string write_gamma_csv(const CalibrationResult& calibration, const std::string& path);
std::string write_compare_csv(const CompareResult& compare, const std::string& path);
std::string write_node_load_csv(const std::vector<double>& compute_s,
                                const std::vector<std::int64_t>& sent_bytes,
                                const std::string& path);
// One row per (node, direction); absent boundary links carry zero busy time.
std::string write_heatmap_csv(const SimReport& report, const MeshSpec& mesh,
                              const std::string& path);
std::string write_dynamic_csv(const std::vector<DynamicStepReport>& steps,
                              const std::string& path);

}  // namespace moeplan
