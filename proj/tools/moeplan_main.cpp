// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: trace generation, gamma calibration, placement
// planning, network simulation, dynamic scheduling evaluation, strategy
// comparison, and figure-data export.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "moeplan/dynamic.hpp"
#include "moeplan/mapping.hpp"
#include "moeplan/netsim.hpp"
#include "moeplan/perfmodel.hpp"
#include "moeplan/pipeline.hpp"
#include "moeplan/planner.hpp"
#include "moeplan/rng.hpp"
#include "moeplan/trace_io.hpp"
#include "moeplan/tracegen.hpp"

namespace {

using nlohmann::json;
using namespace moeplan;

struct GlobalOptions {
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = ".";
};

std::string in_out_dir(const GlobalOptions& global, const std::string& path) {
    if (path.empty() || path.front() == '/' || global.out_dir == ".") return path;
    std::filesystem::create_directories(global.out_dir);
    return (std::filesystem::path(global.out_dir) / path).string();
}

void write_json(const json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << doc.dump(2) << '\n';
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    json doc;
    in >> doc;
    if (doc.value("schema", -1) != 1)
        throw std::runtime_error(path + ": missing or unsupported \"schema\"");
    return doc;
}

double parse_gamma(const std::string& text) {
    if (text == "auto") return 0.0;
    const double g = std::stod(text);
    if (!(g > 0.0)) throw std::invalid_argument("gamma must be positive or \"auto\"");
    return g;
}

Strategy parse_strategy_flag(const std::string& s) {
    if (s == "tp") return Strategy::TP;
    if (s == "ep") return Strategy::EP;
    if (s == "hybrid-cb") return Strategy::HybridCB;
    if (s == "node") return Strategy::NodeBalance;
    if (s == "node-link") return Strategy::NodeLinkBalance;
    throw std::invalid_argument("unknown strategy: " + s +
                                " (expected tp|ep|hybrid-cb|node|node-link)");
}

json steps_to_json(const std::vector<DynamicStepReport>& steps) {
    json arr = json::array();
    for (const DynamicStepReport& s : steps) {
        arr.push_back({{"iteration", s.iteration},
                       {"layer", s.layer},
                       {"broadcast_experts", s.broadcast_experts},
                       {"broadcasts", s.broadcasts},
                       {"chunk_size", s.chunk_size},
                       {"t_pre_b_s", s.t_pre_b_s},
                       {"t_pre_b_sim_s", s.t_pre_b_sim_s},
                       {"static_latency_s", s.static_latency_s},
                       {"dynamic_latency_s", s.dynamic_latency_s},
                       {"static_max_load_s", s.static_max_load_s},
                       {"dynamic_max_load_s", s.dynamic_max_load_s},
                       {"adopted", s.adopted}});
    }
    return arr;
}

int run(int argc, char** argv) {
    CLI::App app{"MoE placement planner and 2D-mesh network simulator"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--seed", global.seed, "master seed fanned out per component");
    app.add_option("--threads", global.threads, "worker threads for independent evaluations");
    app.add_option("--out-dir", global.out_dir, "directory for relative output paths");

    // gen-trace ------------------------------------------------------------
    auto* gen = app.add_subcommand("gen-trace", "generate a synthetic routing trace");
    std::string gen_model = "deepseek", gen_out = "trace.jsonl";
    int gen_batch = 256, gen_iters = 1;
    double gen_skew = 0.0, gen_affinity = 0.0, gen_locality = 0.0, gen_drift = 0.0;
    gen->add_option("--model", gen_model, "model preset or JSON file");
    gen->add_option("--batch", gen_batch, "tokens per iteration")->check(CLI::PositiveNumber);
    gen->add_option("--iters", gen_iters, "iterations")->check(CLI::PositiveNumber);
    gen->add_option("--skew", gen_skew, "Zipf-like exponent over experts");
    gen->add_option("--affinity", gen_affinity, "co-activation partner strength [0,1]");
    gen->add_option("--locality", gen_locality, "previous-layer reuse probability [0,1]");
    gen->add_option("--drift", gen_drift, "per-iteration hot-set rotation [0,1]");
    gen->add_option("-o,--out", gen_out, "output trace path");

    // calibrate ------------------------------------------------------------
    auto* cal = app.add_subcommand("calibrate", "fit gamma: simulated vs estimated latency");
    std::string cal_trace, cal_model = "deepseek", cal_mesh = "4x4", cal_hw = "5TF:50GBps";
    std::string cal_out = "gamma.json", cal_csv;
    int cal_samples = 50;
    cal->add_option("--trace", cal_trace, "trace file")->required();
    cal->add_option("--model", cal_model, "model preset or JSON file");
    cal->add_option("--mesh", cal_mesh, "mesh shape RxC");
    cal->add_option("--hw", cal_hw, "hardware profile <t>TF:<b>GBps[:<a>ns]");
    cal->add_option("--samples", cal_samples, "random placements")->check(CLI::PositiveNumber);
    cal->add_option("-o,--out", cal_out, "output JSON");
    cal->add_option("--csv", cal_csv, "also write the (estimate, simulated) scatter CSV");

    // plan -----------------------------------------------------------------
    auto* plan = app.add_subcommand("plan", "synthesize a placement");
    std::string plan_trace, plan_model = "deepseek", plan_mesh = "4x4", plan_hw = "5TF:50GBps";
    std::string plan_strategy = "node", plan_gamma = "auto", plan_out = "placement.json";
    std::string plan_mapping_out;
    int plan_regions = 0, plan_budget = 150, plan_mapping_budget = 200;
    plan->add_option("--trace", plan_trace, "trace file")->required();
    plan->add_option("--model", plan_model, "model preset or JSON file");
    plan->add_option("--mesh", plan_mesh, "mesh shape RxC");
    plan->add_option("--hw", plan_hw, "hardware profile");
    plan->add_option("--strategy", plan_strategy, "tp|ep|hybrid-cb|node|node-link");
    plan->add_option("--gamma", plan_gamma, "positive value or \"auto\"");
    plan->add_option("--regions", plan_regions, "hybrid sub-region count (0 = preset default)");
    plan->add_option("--budget", plan_budget, "node-balance local-search budget");
    plan->add_option("--mapping-budget", plan_mapping_budget, "mapping search evaluations");
    plan->add_option("-o,--out", plan_out, "output placement JSON");
    plan->add_option("--mapping-out", plan_mapping_out, "output mapping JSON");

    // simulate ---------------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "event-simulate one layer's traffic");
    std::string sim_trace, sim_placement, sim_mapping, sim_model = "deepseek";
    std::string sim_mesh = "4x4", sim_hw = "5TF:50GBps", sim_out = "sim.json", sim_heatmap;
    int sim_layer = 0, sim_iter = 0;
    std::int64_t sim_chunk = 4096;
    sim->add_option("--trace", sim_trace, "trace file")->required();
    sim->add_option("--placement", sim_placement, "placement file")->required();
    sim->add_option("--mapping", sim_mapping, "mapping file (identity when omitted)");
    sim->add_option("--model", sim_model, "model preset or JSON file");
    sim->add_option("--mesh", sim_mesh, "mesh shape RxC");
    sim->add_option("--hw", sim_hw, "hardware profile");
    sim->add_option("--layer", sim_layer, "layer index");
    sim->add_option("--iter", sim_iter, "iteration index");
    sim->add_option("--chunk", sim_chunk, "chunk bytes")->check(CLI::PositiveNumber);
    sim->add_option("-o,--out", sim_out, "output JSON");
    sim->add_option("--heatmap", sim_heatmap, "link-utilization CSV");

    // dynamic-sim ------------------------------------------------------------
    auto* dyn = app.add_subcommand("dynamic-sim", "online scheduling over a trace");
    std::string dyn_trace, dyn_placement, dyn_mapping, dyn_model = "deepseek";
    std::string dyn_mesh = "4x4", dyn_hw = "5TF:50GBps", dyn_out = "dynamic.json", dyn_csv;
    std::string dyn_enable = "on";
    double dyn_accuracy = 0.9, dyn_gamma = 1.0;
    int dyn_max_broadcasts = -1;
    dyn->add_option("--trace", dyn_trace, "trace file")->required();
    dyn->add_option("--placement", dyn_placement, "placement file")->required();
    dyn->add_option("--mapping", dyn_mapping, "mapping file (identity when omitted)");
    dyn->add_option("--model", dyn_model, "model preset or JSON file");
    dyn->add_option("--mesh", dyn_mesh, "mesh shape RxC");
    dyn->add_option("--hw", dyn_hw, "hardware profile");
    dyn->add_option("--accuracy", dyn_accuracy, "prediction accuracy in [0,1]");
    dyn->add_option("--enable-dynamic", dyn_enable, "on|off");
    dyn->add_option("--max-broadcasts", dyn_max_broadcasts, "cap on k per layer (-1 = none)");
    dyn->add_option("--gamma", dyn_gamma, "communication scaling coefficient");
    dyn->add_option("-o,--out", dyn_out, "output JSON");
    dyn->add_option("--csv", dyn_csv, "per-layer static/dynamic latency CSV");

    // compare ----------------------------------------------------------------
    auto* cmp = app.add_subcommand("compare", "evaluate strategies on one trace");
    std::string cmp_trace, cmp_model = "deepseek", cmp_mesh = "4x4", cmp_hw = "5TF:50GBps";
    std::string cmp_strategies = "tp,ep,hybrid-cb,node-link", cmp_gamma = "auto";
    std::string cmp_out = "compare.json", cmp_csv;
    int cmp_regions = 0, cmp_budget = 150, cmp_mapping_budget = 200;
    cmp->add_option("--trace", cmp_trace, "trace file")->required();
    cmp->add_option("--model", cmp_model, "model preset or JSON file");
    cmp->add_option("--mesh", cmp_mesh, "mesh shape RxC");
    cmp->add_option("--hw", cmp_hw, "hardware profile");
    cmp->add_option("--strategies", cmp_strategies, "comma list of strategies (>= 2)");
    cmp->add_option("--gamma", cmp_gamma, "positive value or \"auto\"");
    cmp->add_option("--regions", cmp_regions, "hybrid sub-region count (0 = preset default)");
    cmp->add_option("--budget", cmp_budget, "node-balance local-search budget");
    cmp->add_option("--mapping-budget", cmp_mapping_budget, "mapping search evaluations");
    cmp->add_option("-o,--out", cmp_out, "output JSON");
    cmp->add_option("--csv", cmp_csv, "also write the comparison CSV");

    // report -----------------------------------------------------------------
    auto* rep = app.add_subcommand("report", "export CSV bundles from prior outputs");
    std::string rep_calibration, rep_compare, rep_sim, rep_dynamic;
    rep->add_option("--calibration", rep_calibration, "calibrate output JSON");
    rep->add_option("--compare", rep_compare, "compare output JSON");
    rep->add_option("--sim", rep_sim, "simulate output JSON");
    rep->add_option("--dynamic", rep_dynamic, "dynamic-sim output JSON");

    for (CLI::App* sub : {gen, cal, plan, sim, dyn, cmp, rep}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        TraceGenConfig cfg;
        cfg.model = resolve_model(gen_model);
        cfg.batch = gen_batch;
        cfg.iterations = gen_iters;
        cfg.skew = gen_skew;
        cfg.affinity_strength = gen_affinity;
        cfg.layer_locality = gen_locality;
        cfg.drift = gen_drift;
        cfg.seed = global.seed;
        const ActivationTrace trace = generate_trace(cfg);
        const json config = {{"command", "gen-trace"}, {"model", gen_model},
                             {"batch", gen_batch},     {"iters", gen_iters},
                             {"skew", gen_skew},       {"affinity", gen_affinity},
                             {"locality", gen_locality}, {"drift", gen_drift},
                             {"seed", global.seed}};
        save_trace(trace, in_out_dir(global, gen_out), config);
        std::cout << "wrote " << in_out_dir(global, gen_out) << "\n";
        return 0;
    }

    if (cal->parsed()) {
        const ModelSpec model = resolve_model(cal_model);
        const MeshSpec mesh = parse_hardware(cal_mesh, cal_hw);
        const ActivationTrace trace = load_trace(cal_trace);
        CalibrationConfig cfg;
        cfg.samples = cal_samples;
        cfg.seed = global.seed;
        cfg.threads = global.threads;
        const CalibrationResult result = calibrate_pipeline(trace, model, mesh, cfg);
        json doc = {{"schema", 1},
                    {"config",
                     {{"command", "calibrate"}, {"trace", cal_trace}, {"model", cal_model},
                      {"mesh", cal_mesh}, {"hw", cal_hw}, {"samples", cal_samples},
                      {"seed", global.seed}}},
                    {"gamma", result.fit.gamma},
                    {"r_squared", result.fit.r_squared},
                    {"sample_count", result.fit.sample_count},
                    {"samples", result.samples}};
        write_json(doc, in_out_dir(global, cal_out));
        if (!cal_csv.empty()) write_gamma_csv(result, in_out_dir(global, cal_csv));
        std::cout << "gamma=" << result.fit.gamma << " r2=" << result.fit.r_squared << "\n";
        return 0;
    }

    if (plan->parsed()) {
        const ModelSpec model = resolve_model(plan_model);
        const MeshSpec mesh = parse_hardware(plan_mesh, plan_hw);
        const ActivationTrace trace = load_trace(plan_trace);
        const TraceStats stats = derive_stats(trace);
        const Strategy strategy = parse_strategy_flag(plan_strategy);
        double gamma = parse_gamma(plan_gamma);
        if (!(gamma > 0.0)) {
            CalibrationConfig cfg;
            cfg.seed = splitmix64(global.seed ^ 0xca1);
            cfg.threads = global.threads;
            gamma = calibrate_pipeline(trace, model, mesh, cfg).fit.gamma;
        }
        const int D = mesh.node_count();
        Placement placement;
        NodeMapping mapping = NodeMapping::identity(D);
        switch (strategy) {
            case Strategy::TP:
                placement = baseline_tp(model, D, trace.layer_count());
                break;
            case Strategy::EP:
                placement = baseline_ep(model, D, stats);
                break;
            case Strategy::HybridCB: {
                const int regions = plan_regions > 0
                                        ? plan_regions
                                        : (model.num_experts >= 64 ? 8 : 2);
                auto [p, m] = baseline_hybrid_cb(model, mesh, stats, regions);
                placement = std::move(p);
                mapping = std::move(m);
                break;
            }
            case Strategy::NodeBalance:
                placement = solve_node_balance_placement(stats, trace.batch(), model, mesh,
                                                         gamma, plan_budget, global.seed);
                break;
            case Strategy::NodeLinkBalance: {
                placement = solve_node_balance_placement(stats, trace.batch(), model, mesh,
                                                         gamma, plan_budget, global.seed);
                placement.strategy = Strategy::NodeLinkBalance;
                MappingSearchConfig cfg;
                cfg.eval_budget = plan_mapping_budget;
                cfg.seed = global.seed;
                int heaviest = 0;
                double worst = -1.0;
                for (std::size_t l = 0; l < placement.layers.size(); ++l) {
                    const double t = comm_estimate(placement.layers[l], stats.layers[l],
                                                   trace.batch(), model, mesh)
                                         .t_hat_s;
                    if (t > worst) { worst = t; heaviest = int(l); }
                }
                mapping = optimize_mapping(placement.layers[std::size_t(heaviest)],
                                           stats.layers[std::size_t(heaviest)], mesh, model,
                                           trace.batch(), cfg)
                              .mapping;
                break;
            }
            case Strategy::Custom:
                throw std::invalid_argument("plan: unsupported strategy");
        }
        const json config = {{"command", "plan"},     {"trace", plan_trace},
                             {"model", plan_model},   {"mesh", plan_mesh},
                             {"hw", plan_hw},         {"strategy", plan_strategy},
                             {"gamma", gamma},        {"regions", plan_regions},
                             {"budget", plan_budget}, {"seed", global.seed}};
        save_placement(placement, in_out_dir(global, plan_out), config);
        if (!plan_mapping_out.empty())
            save_mapping(mapping, in_out_dir(global, plan_mapping_out), config);
        std::cout << "wrote " << in_out_dir(global, plan_out) << "\n";
        return 0;
    }

    if (sim->parsed()) {
        const ModelSpec model = resolve_model(sim_model);
        const MeshSpec mesh = parse_hardware(sim_mesh, sim_hw);
        const ActivationTrace trace = load_trace(sim_trace);
        const Placement placement = load_placement(sim_placement);
        const NodeMapping mapping = sim_mapping.empty()
                                        ? NodeMapping::identity(mesh.node_count())
                                        : load_mapping(sim_mapping);
        if (sim_iter < 0 || sim_iter >= int(trace.iterations.size()) || sim_layer < 0 ||
            sim_layer >= trace.layer_count())
            throw std::invalid_argument("simulate: layer or iteration out of range");
        if (int(placement.layers.size()) <= sim_layer)
            throw std::invalid_argument("simulate: placement has too few layers");

        const LayerTokens& tokens =
            trace.iterations[std::size_t(sim_iter)].layers[std::size_t(sim_layer)];
        const LayerPlacement& lp = placement.layers[std::size_t(sim_layer)];
        const SimReport report = simulate(
            build_tasks(tokens, lp, mapping, model, splitmix64(global.seed ^ 0x51)), mesh,
            sim_chunk);
        const LayerStats stats = empirical_layer_stats(tokens, model.num_experts);
        const ComputeLoad comp = compute_time(lp, stats, double(tokens.size()), model, mesh);

        json doc = {{"schema", 1},
                    {"config",
                     {{"command", "simulate"}, {"trace", sim_trace},
                      {"placement", sim_placement}, {"mapping", sim_mapping},
                      {"model", sim_model}, {"mesh", sim_mesh}, {"hw", sim_hw},
                      {"layer", sim_layer}, {"iter", sim_iter}, {"chunk", sim_chunk},
                      {"seed", global.seed}}},
                    {"mesh", {{"rows", mesh.rows}, {"cols", mesh.cols}}},
                    {"makespan_s", report.makespan_s},
                    {"per_link_busy_s", report.per_link_busy_s},
                    {"per_node_sent_bytes", report.per_node_sent_bytes},
                    {"per_node_received_bytes", report.per_node_received_bytes},
                    {"per_node_compute_s", comp.per_node_s},
                    {"task_completion_times_s", report.task_completion_times_s}};
        write_json(doc, in_out_dir(global, sim_out));
        if (!sim_heatmap.empty())
            write_heatmap_csv(report, mesh, in_out_dir(global, sim_heatmap));
        std::cout << "makespan_s=" << report.makespan_s << "\n";
        return 0;
    }

    if (dyn->parsed()) {
        const ModelSpec model = resolve_model(dyn_model);
        const MeshSpec mesh = parse_hardware(dyn_mesh, dyn_hw);
        const ActivationTrace trace = load_trace(dyn_trace);
        const Placement placement = load_placement(dyn_placement);
        const NodeMapping mapping = dyn_mapping.empty()
                                        ? NodeMapping::identity(mesh.node_count())
                                        : load_mapping(dyn_mapping);
        DynamicPolicy policy = DynamicPolicy::defaults(model, mesh, dyn_accuracy);
        policy.enabled = dyn_enable == "on";
        if (dyn_max_broadcasts >= 0) policy.max_broadcasts_per_layer = dyn_max_broadcasts;
        const std::vector<DynamicStepReport> steps =
            dynamic_simulate(trace, placement, mapping, policy, model, mesh, dyn_gamma);
        json doc = {{"schema", 1},
                    {"config",
                     {{"command", "dynamic-sim"}, {"trace", dyn_trace},
                      {"placement", dyn_placement}, {"mapping", dyn_mapping},
                      {"model", dyn_model}, {"mesh", dyn_mesh}, {"hw", dyn_hw},
                      {"accuracy", dyn_accuracy}, {"enable", policy.enabled},
                      {"max_broadcasts", dyn_max_broadcasts}, {"gamma", dyn_gamma},
                      {"seed", global.seed}}},
                    {"steps", steps_to_json(steps)}};
        write_json(doc, in_out_dir(global, dyn_out));
        if (!dyn_csv.empty()) write_dynamic_csv(steps, in_out_dir(global, dyn_csv));
        double static_total = 0.0, dynamic_total = 0.0;
        for (const DynamicStepReport& s : steps) {
            static_total += s.static_latency_s;
            dynamic_total += s.dynamic_latency_s;
        }
        std::cout << "static_s=" << static_total << " dynamic_s=" << dynamic_total << "\n";
        return 0;
    }

    if (cmp->parsed()) {
        const ModelSpec model = resolve_model(cmp_model);
        const MeshSpec mesh = parse_hardware(cmp_mesh, cmp_hw);
        const ActivationTrace trace = load_trace(cmp_trace);
        CompareOptions options;
        std::size_t begin = 0;
        while (begin <= cmp_strategies.size()) {
            const std::size_t comma = cmp_strategies.find(',', begin);
            const std::string item = cmp_strategies.substr(
                begin, comma == std::string::npos ? comma : comma - begin);
            if (!item.empty()) options.strategies.push_back(parse_strategy_flag(item));
            if (comma == std::string::npos) break;
            begin = comma + 1;
        }
        options.gamma = parse_gamma(cmp_gamma);
        options.seed = global.seed;
        options.threads = global.threads;
        options.hybrid_regions = cmp_regions;
        options.solver_budget = cmp_budget;
        options.mapping_budget = cmp_mapping_budget;
        const CompareResult result = run_compare(trace, model, mesh, options);

        json rows = json::array();
        for (const StrategyOutcome& row : result.rows) {
            rows.push_back({{"strategy", to_string(row.strategy)},
                            {"cap_feasible", row.cap_feasible},
                            {"t_comp_s", row.t_comp_s},
                            {"t_comm_model_s", row.t_comm_model_s},
                            {"t_comm_sim_s", row.t_comm_sim_s},
                            {"latency_model_s", row.latency_model_s},
                            {"latency_sim_s", row.latency_sim_s},
                            {"normalized_tbt_model", row.normalized_tbt_model},
                            {"normalized_tbt_sim", row.normalized_tbt_sim},
                            {"linearized_objective_s", row.linearized_objective_s}});
        }
        json doc = {{"schema", 1},
                    {"config",
                     {{"command", "compare"}, {"trace", cmp_trace}, {"model", cmp_model},
                      {"mesh", cmp_mesh}, {"hw", cmp_hw}, {"strategies", cmp_strategies},
                      {"gamma_flag", cmp_gamma}, {"regions", cmp_regions},
                      {"budget", cmp_budget}, {"mapping_budget", cmp_mapping_budget},
                      {"seed", global.seed}}},
                    {"gamma", result.gamma},
                    {"rows", rows}};
        write_json(doc, in_out_dir(global, cmp_out));
        if (!cmp_csv.empty()) write_compare_csv(result, in_out_dir(global, cmp_csv));
        std::cout << "wrote " << in_out_dir(global, cmp_out) << "\n";
        return 0;
    }

    if (rep->parsed()) {
        std::vector<std::string> written;
        if (rep_calibration.empty() && rep_compare.empty() && rep_sim.empty() &&
            rep_dynamic.empty())
            throw std::invalid_argument(
                "report: no inputs; provide at least one of --calibration, --compare, "
                "--sim, --dynamic");
        std::filesystem::create_directories(global.out_dir);
        if (!rep_calibration.empty()) {
            const json doc = read_json(rep_calibration);
            CalibrationResult calibration;
            for (const auto& xy : doc.at("samples"))
                calibration.samples.push_back({xy[0].get<double>(), xy[1].get<double>()});
            written.push_back(
                write_gamma_csv(calibration, in_out_dir(global, "gamma_scatter.csv")));
        }
        if (!rep_compare.empty()) {
            const json doc = read_json(rep_compare);
            CompareResult compare;
            for (const auto& row : doc.at("rows")) {
                StrategyOutcome outcome;
                outcome.strategy = strategy_from_string(row.at("strategy").get<std::string>());
                outcome.cap_feasible = row.at("cap_feasible").get<bool>();
                outcome.t_comp_s = row.at("t_comp_s").get<double>();
                outcome.t_comm_model_s = row.at("t_comm_model_s").get<double>();
                outcome.t_comm_sim_s = row.at("t_comm_sim_s").get<double>();
                outcome.latency_model_s = row.at("latency_model_s").get<double>();
                outcome.latency_sim_s = row.at("latency_sim_s").get<double>();
                outcome.normalized_tbt_model = row.at("normalized_tbt_model").get<double>();
                outcome.normalized_tbt_sim = row.at("normalized_tbt_sim").get<double>();
                compare.rows.push_back(std::move(outcome));
            }
            written.push_back(
                write_compare_csv(compare, in_out_dir(global, "speedup_table.csv")));
        }
        if (!rep_sim.empty()) {
            const json doc = read_json(rep_sim);
            MeshSpec mesh;
            mesh.rows = doc.at("mesh").at("rows").get<int>();
            mesh.cols = doc.at("mesh").at("cols").get<int>();
            SimReport report;
            report.per_link_busy_s = doc.at("per_link_busy_s").get<std::vector<double>>();
            report.per_node_sent_bytes =
                doc.at("per_node_sent_bytes").get<std::vector<std::int64_t>>();
            written.push_back(
                write_heatmap_csv(report, mesh, in_out_dir(global, "link_heatmap.csv")));
            written.push_back(write_node_load_csv(
                doc.at("per_node_compute_s").get<std::vector<double>>(),
                report.per_node_sent_bytes, in_out_dir(global, "node_loads.csv")));
        }
        if (!rep_dynamic.empty()) {
            const json doc = read_json(rep_dynamic);
            std::vector<DynamicStepReport> steps;
            for (const auto& s : doc.at("steps")) {
                DynamicStepReport step;
                step.iteration = s.at("iteration").get<int>();
                step.layer = s.at("layer").get<int>();
                step.broadcasts = s.at("broadcasts").get<int>();
                step.t_pre_b_s = s.at("t_pre_b_s").get<double>();
                step.static_latency_s = s.at("static_latency_s").get<double>();
                step.dynamic_latency_s = s.at("dynamic_latency_s").get<double>();
                step.static_max_load_s = s.at("static_max_load_s").get<double>();
                step.dynamic_max_load_s = s.at("dynamic_max_load_s").get<double>();
                step.adopted = s.at("adopted").get<bool>();
                steps.push_back(std::move(step));
            }
            written.push_back(
                write_dynamic_csv(steps, in_out_dir(global, "dynamic_latency.csv")));
        }
        for (const std::string& path : written) std::cout << "wrote " << path << "\n";
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        nlohmann::json envelope = {{"schema", 1}, {"error", {{"message", e.what()}}}};
        std::cout << envelope.dump() << std::endl;
        return 1;
    }
}
