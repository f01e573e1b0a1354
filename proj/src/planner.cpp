// SPDX-License-Identifier: Apache-2.0
#include "moeplan/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "moeplan/netsim.hpp"
#include "moeplan/rng.hpp"
#include "moeplan/simplex.hpp"

namespace moeplan {

namespace {

constexpr double kLoadEpsilon = 1e-6;  // stand-in for the strict positivity bound
constexpr double kImproveTol = 1e-12;

std::size_t cell(int i, int c, int D) { return std::size_t(i) * D + std::size_t(c); }

// Greedy longest-processing-time assignment of whole experts to bins.
std::vector<int> lpt_assign(const std::vector<double>& freq, int bins) {
    const int E = int(freq.size());
    std::vector<int> order(static_cast<std::size_t>(E));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return freq[std::size_t(a)] > freq[std::size_t(b)]; });
    std::vector<double> load(std::size_t(bins), 0.0);
    std::vector<int> bin_of(std::size_t(E), 0);
    for (int i : order) {
        int best = 0;
        for (int b = 1; b < bins; ++b)
            if (load[std::size_t(b)] < load[std::size_t(best)]) best = b;
        bin_of[std::size_t(i)] = best;
        load[std::size_t(best)] += freq[std::size_t(i)];
    }
    return bin_of;
}

}  // namespace

Placement baseline_tp(const ModelSpec& model, int node_count, int num_layers) {
    Placement placement;
    placement.strategy = Strategy::TP;
    LayerPlacement lp(model.num_experts, node_count);
    const double share = 1.0 / node_count;
    std::fill(lp.shares.begin(), lp.shares.end(), share);
    placement.layers.assign(std::size_t(num_layers), lp);
    return placement;
}

Placement baseline_ep(const ModelSpec& model, int node_count, const TraceStats& stats) {
    Placement placement;
    placement.strategy = Strategy::EP;
    for (const LayerStats& ls : stats.layers) {
        LayerPlacement lp(model.num_experts, node_count);
        std::vector<int> bin_of = lpt_assign(ls.freq, node_count);
        for (int i = 0; i < model.num_experts; ++i) lp.at(i, bin_of[std::size_t(i)]) = 1.0;
        placement.layers.push_back(std::move(lp));
    }
    return placement;
}

std::pair<Placement, NodeMapping> baseline_hybrid_cb(const ModelSpec& model,
                                                     const MeshSpec& mesh,
                                                     const TraceStats& stats,
                                                     int num_regions) {
    const int D = mesh.node_count();
    if (num_regions < 1 || D % num_regions != 0)
        throw std::invalid_argument("hybrid baseline: num_regions must divide the node count");

    // Tile the mesh into a grid of region blocks; prefer near-square regions.
    int best_a = -1, best_b = -1, best_gap = std::numeric_limits<int>::max();
    for (int a = 1; a <= mesh.rows; ++a) {
        if (mesh.rows % a != 0 || num_regions % a != 0) continue;
        const int b = num_regions / a;
        if (b > mesh.cols || mesh.cols % b != 0) continue;
        const int gap = std::abs(mesh.rows / a - mesh.cols / b);
        if (gap < best_gap) { best_gap = gap; best_a = a; best_b = b; }
    }
    if (best_a < 0)
        throw std::invalid_argument("hybrid baseline: num_regions does not tile the mesh");
    const int region_rows = mesh.rows / best_a;
    const int region_cols = mesh.cols / best_b;

    std::vector<std::vector<int>> region_nodes(static_cast<std::size_t>(num_regions));
    for (int node = 0; node < D; ++node) {
        const Coord c{node % mesh.cols, node / mesh.cols};
        const int region = (c.y / region_rows) * best_b + (c.x / region_cols);
        region_nodes[std::size_t(region)].push_back(node);
    }

    Placement placement;
    placement.strategy = Strategy::HybridCB;
    for (const LayerStats& ls : stats.layers) {
        LayerPlacement lp(model.num_experts, D);
        std::vector<int> region_of = lpt_assign(ls.freq, num_regions);
        for (int i = 0; i < model.num_experts; ++i) {
            const std::vector<int>& nodes = region_nodes[std::size_t(region_of[std::size_t(i)])];
            for (int node : nodes) lp.at(i, node) = 1.0 / double(nodes.size());
        }
        placement.layers.push_back(std::move(lp));
    }
    return {std::move(placement), NodeMapping::identity(D)};
}

// ---------------------------------------------------------------------------
// Node-balance solver internals
// ---------------------------------------------------------------------------

namespace {

using Pattern = std::vector<std::uint8_t>;  // E x D activity indicators

struct SolveContext {
    int E = 0;
    int D = 0;
    std::vector<double> freq;        // f_i
    std::vector<double> group_mass;  // sum of group frequencies containing i
    double k_comp = 0.0;             // seconds per unit of f-load
    double k_comm = 0.0;             // seconds per unit of group mass
    double cap = 0.0;                // per-node f-load upper bound
    double gamma = 1.0;
    double freq_total = 0.0;
    int positive_freq_experts = 0;
};

SolveContext make_context(const NodeBalanceProblem& p) {
    SolveContext ctx;
    ctx.E = p.model.num_experts;
    ctx.D = p.mesh.node_count();
    ctx.freq = p.stats.freq;
    if (int(ctx.freq.size()) != ctx.E)
        throw std::invalid_argument("node balance: stats frequency length mismatch");
    ctx.group_mass.assign(std::size_t(ctx.E), 0.0);
    for (const ExpertGroup& g : p.stats.groups)
        for (int i : g.experts) ctx.group_mass[std::size_t(i)] += g.freq;
    ctx.k_comp = p.batch * 2.0 * p.model.hidden_size * p.model.intermediate_size /
                 p.mesh.node_compute_flops;
    ctx.k_comm = double(p.model.bytes_per_activation) * p.batch * p.model.hidden_size /
                 p.mesh.link_bandwidth_Bps;
    ctx.cap = node_load_cap(p.model, p.mesh, ctx.D);
    ctx.gamma = p.gamma;
    for (double f : ctx.freq) {
        ctx.freq_total += f;
        if (f > 0.0) ++ctx.positive_freq_experts;
    }
    if (ctx.freq_total <= 0.0)
        throw std::invalid_argument("node balance: all expert frequencies are zero");
    return ctx;
}

double pattern_comm_mass(const SolveContext& ctx, const Pattern& z) {
    double worst = 0.0;
    for (int c = 0; c < ctx.D; ++c) {
        double mass = 0.0;
        for (int i = 0; i < ctx.E; ++i)
            if (z[cell(i, c, ctx.D)]) mass += ctx.group_mass[std::size_t(i)];
        worst = std::max(worst, mass);
    }
    return worst;
}

struct ShareSolution {
    bool feasible = false;
    LayerPlacement placement;
    double max_load = 0.0;  // in f-units
};

// Min-max load share program for a fixed activity pattern. Columns are the
// active cells plus the bottleneck variable.
ShareSolution solve_shares(const SolveContext& ctx, const Pattern& z, bool use_cap,
                           bool use_load_floor) {
    std::vector<int> var_of(std::size_t(ctx.E) * std::size_t(ctx.D), -1);
    std::vector<std::pair<int, int>> cells;
    for (int i = 0; i < ctx.E; ++i)
        for (int c = 0; c < ctx.D; ++c)
            if (z[cell(i, c, ctx.D)]) {
                var_of[cell(i, c, ctx.D)] = int(cells.size());
                cells.push_back({i, c});
            }
    const int n = int(cells.size());
    const int u_var = n;

    LpProblem lp;
    lp.num_vars = n + 1;
    lp.objective.assign(std::size_t(n) + 1, 0.0);
    lp.objective[std::size_t(u_var)] = 1.0;

    for (int i = 0; i < ctx.E; ++i) {
        std::vector<double> row(std::size_t(n) + 1, 0.0);
        bool any = false;
        for (int c = 0; c < ctx.D; ++c) {
            const int v = var_of[cell(i, c, ctx.D)];
            if (v >= 0) { row[std::size_t(v)] = 1.0; any = true; }
        }
        if (!any) return {};  // unplaced expert
        lp.add_row(std::move(row), LpRelation::Equal, 1.0);
    }
    for (int c = 0; c < ctx.D; ++c) {
        std::vector<double> load(std::size_t(n) + 1, 0.0);
        for (int i = 0; i < ctx.E; ++i) {
            const int v = var_of[cell(i, c, ctx.D)];
            if (v >= 0) load[std::size_t(v)] = ctx.freq[std::size_t(i)];
        }
        std::vector<double> bottleneck = load;
        bottleneck[std::size_t(u_var)] = -1.0;
        lp.add_row(std::move(bottleneck), LpRelation::LessEqual, 0.0);
        if (use_cap) lp.add_row(load, LpRelation::LessEqual, ctx.cap);
        if (use_load_floor) lp.add_row(load, LpRelation::GreaterEqual, kLoadEpsilon);
    }

    LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) return {};

    ShareSolution out;
    out.feasible = true;
    out.max_load = sol.x[std::size_t(u_var)];
    out.placement = LayerPlacement(ctx.E, ctx.D);
    for (int k = 0; k < n; ++k) {
        const auto [i, c] = cells[std::size_t(k)];
        out.placement.at(i, c) = sol.x[std::size_t(k)];
    }
    // tidy solver noise so the placement passes strict validation
    for (int i = 0; i < ctx.E; ++i) {
        double sum = 0.0;
        for (int c = 0; c < ctx.D; ++c) {
            double& v = out.placement.at(i, c);
            if (v < 0.0) v = 0.0;
            if (v > 1.0) v = 1.0;
            sum += v;
        }
        if (sum > 0.0)
            for (int c = 0; c < ctx.D; ++c) out.placement.at(i, c) /= sum;
    }
    return out;
}

struct RelaxationResult {
    bool solved = false;
    LayerPlacement placement;
    double objective_s = 0.0;
};

// Continuous relaxation: the activity variables collapse onto the shares, so
// the program is solved in the shares alone plus the two bottleneck terms.
RelaxationResult solve_relaxation(const SolveContext& ctx) {
    const int n_cells = ctx.E * ctx.D;
    const int u_var = n_cells;
    const int v_var = n_cells + 1;

    LpProblem lp;
    lp.num_vars = n_cells + 2;
    lp.objective.assign(std::size_t(n_cells) + 2, 0.0);
    const double scale = 1.0 / std::max(ctx.k_comp, 2.0 * ctx.gamma * ctx.k_comm);
    lp.objective[std::size_t(u_var)] = ctx.k_comp * scale;
    lp.objective[std::size_t(v_var)] = 2.0 * ctx.gamma * ctx.k_comm * scale;

    for (int i = 0; i < ctx.E; ++i) {
        std::vector<double> row(std::size_t(n_cells) + 2, 0.0);
        for (int c = 0; c < ctx.D; ++c) row[cell(i, c, ctx.D)] = 1.0;
        lp.add_row(std::move(row), LpRelation::Equal, 1.0);
    }
    for (int c = 0; c < ctx.D; ++c) {
        std::vector<double> comp(std::size_t(n_cells) + 2, 0.0);
        std::vector<double> comm(std::size_t(n_cells) + 2, 0.0);
        std::vector<double> load(std::size_t(n_cells) + 2, 0.0);
        for (int i = 0; i < ctx.E; ++i) {
            comp[cell(i, c, ctx.D)] = ctx.freq[std::size_t(i)];
            comm[cell(i, c, ctx.D)] = ctx.group_mass[std::size_t(i)];
            load[cell(i, c, ctx.D)] = ctx.freq[std::size_t(i)];
        }
        comp[std::size_t(u_var)] = -1.0;
        comm[std::size_t(v_var)] = -1.0;
        lp.add_row(std::move(comp), LpRelation::LessEqual, 0.0);
        lp.add_row(std::move(comm), LpRelation::LessEqual, 0.0);
        lp.add_row(load, LpRelation::LessEqual, ctx.cap);
        if (ctx.positive_freq_experts >= ctx.D)
            lp.add_row(load, LpRelation::GreaterEqual, kLoadEpsilon);
    }

    LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) return {};

    RelaxationResult out;
    out.solved = true;
    out.objective_s = sol.objective / scale;
    out.placement = LayerPlacement(ctx.E, ctx.D);
    for (int i = 0; i < ctx.E; ++i)
        for (int c = 0; c < ctx.D; ++c)
            out.placement.at(i, c) = sol.x[cell(i, c, ctx.D)];
    return out;
}

Pattern pattern_from_support(const SolveContext& ctx, const LayerPlacement& p) {
    Pattern z(std::size_t(ctx.E) * std::size_t(ctx.D), 0);
    for (int i = 0; i < ctx.E; ++i)
        for (int c = 0; c < ctx.D; ++c)
            if (p.active(i, c)) z[cell(i, c, ctx.D)] = 1;
    return z;
}

Pattern round_pattern(const SolveContext& ctx, const LayerPlacement& relaxed) {
    Pattern z(std::size_t(ctx.E) * std::size_t(ctx.D), 0);
    for (int i = 0; i < ctx.E; ++i) {
        bool any = false;
        for (int c = 0; c < ctx.D; ++c)
            if (relaxed.at(i, c) >= 0.5) { z[cell(i, c, ctx.D)] = 1; any = true; }
        if (!any) z[cell(i, relaxed.dominant_node(i), ctx.D)] = 1;
    }
    return z;
}

// Make the pattern coverable: every node needs some positive-frequency
// support, and additional entries are planted until the share program turns
// feasible (splitting concentrated experts first).
void repair_pattern(const SolveContext& ctx, Pattern& z) {
    int hottest = 0;
    for (int i = 1; i < ctx.E; ++i)
        if (ctx.freq[std::size_t(i)] > ctx.freq[std::size_t(hottest)]) hottest = i;
    const bool want_floor = ctx.positive_freq_experts >= ctx.D;
    if (want_floor) {
        for (int c = 0; c < ctx.D; ++c) {
            bool covered = false;
            for (int i = 0; i < ctx.E; ++i)
                if (z[cell(i, c, ctx.D)] && ctx.freq[std::size_t(i)] > 0.0) covered = true;
            if (!covered) z[cell(hottest, c, ctx.D)] = 1;
        }
    }
    for (int round = 0; round < ctx.E * ctx.D; ++round) {
        if (solve_shares(ctx, z, true, want_floor).feasible) return;
        // split the most concentrated expert onto the least committed node
        int pick = -1;
        double pick_density = 0.0;
        std::vector<int> support(std::size_t(ctx.E), 0);
        for (int i = 0; i < ctx.E; ++i) {
            for (int c = 0; c < ctx.D; ++c) support[std::size_t(i)] += z[cell(i, c, ctx.D)];
            if (support[std::size_t(i)] >= ctx.D) continue;
            const double density = ctx.freq[std::size_t(i)] / double(support[std::size_t(i)]);
            if (density > pick_density) { pick_density = density; pick = i; }
        }
        if (pick < 0) return;  // fully split everywhere, leave to the fallback
        int best_node = -1;
        double best_commit = 0.0;
        for (int c = 0; c < ctx.D; ++c) {
            if (z[cell(pick, c, ctx.D)]) continue;
            double commit = 0.0;
            for (int i = 0; i < ctx.E; ++i)
                if (z[cell(i, c, ctx.D)])
                    commit += ctx.freq[std::size_t(i)] / double(std::max(1, support[std::size_t(i)]));
            if (best_node < 0 || commit < best_commit) { best_node = c; best_commit = commit; }
        }
        if (best_node < 0) return;
        z[cell(pick, best_node, ctx.D)] = 1;
    }
}

struct Incumbent {
    Pattern pattern;
    ShareSolution shares;
    double objective_s = std::numeric_limits<double>::infinity();
};

class PatternSearch {
public:
    PatternSearch(const SolveContext& ctx, int budget, std::uint64_t seed)
        : ctx_(ctx), budget_(budget), rng_(Rng::stream(seed, 0xbead)) {}

    // Evaluates the pattern (one LP) and updates the incumbent.
    void consider(const Pattern& z) {
        if (budget_used_ >= budget_ && !best_.pattern.empty()) return;
        auto it = memo_.find(z);
        double obj;
        ShareSolution shares;
        if (it != memo_.end()) {
            obj = it->second;
            if (obj >= best_.objective_s) return;
            shares = solve_shares(ctx_, z, true, ctx_.positive_freq_experts >= ctx_.D);
        } else {
            ++budget_used_;
            shares = solve_shares(ctx_, z, true, ctx_.positive_freq_experts >= ctx_.D);
            obj = shares.feasible
                      ? ctx_.k_comp * shares.max_load +
                            2.0 * ctx_.gamma * ctx_.k_comm * pattern_comm_mass(ctx_, z)
                      : std::numeric_limits<double>::infinity();
            memo_[z] = obj;
        }
        if (shares.feasible && obj < best_.objective_s - kImproveTol) {
            best_ = Incumbent{z, std::move(shares), obj};
        }
    }

    // First-improvement sweeps over single-cell flips and same-expert moves.
    void hill_climb() {
        bool improved = true;
        while (improved && budget_used_ < budget_ && !best_.pattern.empty()) {
            improved = false;
            std::vector<std::pair<int, int>> moves;  // (flat cell, target node or -1)
            for (int i = 0; i < ctx_.E; ++i)
                for (int c = 0; c < ctx_.D; ++c) {
                    moves.push_back({int(cell(i, c, ctx_.D)), -1});
                    for (int c2 = 0; c2 < ctx_.D; ++c2)
                        if (c2 != c) moves.push_back({int(cell(i, c, ctx_.D)), c2});
                }
            rng_.shuffle(moves);
            const double before = best_.objective_s;
            for (const auto& [flat, target] : moves) {
                if (budget_used_ >= budget_) break;
                const int i = flat / ctx_.D;
                const int c = flat % ctx_.D;
                Pattern z = best_.pattern;
                if (target < 0) {
                    z[std::size_t(flat)] ^= 1;
                } else {
                    if (!z[std::size_t(flat)] || z[cell(i, target, ctx_.D)]) continue;
                    z[std::size_t(flat)] = 0;
                    z[cell(i, target, ctx_.D)] = 1;
                }
                bool row_empty = true;
                for (int c2 = 0; c2 < ctx_.D && row_empty; ++c2)
                    if (z[cell(i, c2, ctx_.D)]) row_empty = false;
                if (row_empty) continue;
                if (!prune_ok(z)) continue;
                consider(z);
                if (best_.objective_s < before - kImproveTol) { improved = true; break; }
            }
        }
    }

    const Incumbent& best() const { return best_; }
    int budget_used() const { return budget_used_; }

private:
    // Cheap lower bound: ideal balance or the most concentrated expert.
    bool prune_ok(const Pattern& z) const {
        if (best_.pattern.empty()) return true;
        double load_lb = ctx_.freq_total / ctx_.D;
        for (int i = 0; i < ctx_.E; ++i) {
            int support = 0;
            for (int c = 0; c < ctx_.D; ++c) support += z[cell(i, c, ctx_.D)];
            if (support > 0)
                load_lb = std::max(load_lb, ctx_.freq[std::size_t(i)] / double(support));
        }
        const double lb =
            ctx_.k_comp * load_lb + 2.0 * ctx_.gamma * ctx_.k_comm * pattern_comm_mass(ctx_, z);
        return lb < best_.objective_s - kImproveTol;
    }

    const SolveContext& ctx_;
    int budget_ = 0;
    int budget_used_ = 0;
    Rng rng_;
    std::map<Pattern, double> memo_;
    Incumbent best_;
};

Pattern ep_pattern(const SolveContext& ctx) {
    Pattern z(std::size_t(ctx.E) * std::size_t(ctx.D), 0);
    std::vector<int> bin_of = lpt_assign(ctx.freq, ctx.D);
    for (int i = 0; i < ctx.E; ++i) z[cell(i, bin_of[std::size_t(i)], ctx.D)] = 1;
    return z;
}

}  // namespace

double linearized_objective(const LayerPlacement& placement, const LayerStats& stats,
                            double batch, const ModelSpec& model, const MeshSpec& mesh,
                            double gamma) {
    ComputeLoad comp = compute_time(placement, stats, batch, model, mesh);
    const double k_comm = double(model.bytes_per_activation) * batch * model.hidden_size /
                          mesh.link_bandwidth_Bps;
    double worst_mass = 0.0;
    for (int c = 0; c < placement.num_nodes; ++c) {
        double mass = 0.0;
        for (const ExpertGroup& g : stats.groups)
            for (int i : g.experts)
                if (placement.active(i, c)) mass += g.freq;
        worst_mass = std::max(worst_mass, mass);
    }
    return comp.max_s + 2.0 * gamma * k_comm * worst_mass;
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Feasible: return "feasible";
        case SolveStatus::Fallback: return "fallback";
    }
    return "feasible";
}

SolveReport solve_node_balance(const NodeBalanceProblem& problem) {
    const auto start = std::chrono::steady_clock::now();
    const SolveContext ctx = make_context(problem);
    SolveReport report;

    RelaxationResult relax = solve_relaxation(ctx);
    Pattern rounded;
    bool rounding_exact = false;
    if (relax.solved) {
        report.relaxation_bound_s = relax.objective_s;
        rounded = round_pattern(ctx, relax.placement);
        rounding_exact = rounded == pattern_from_support(ctx, relax.placement);
    } else {
        report.notes.push_back("relaxation not solved; heuristic-only search");
        rounded = ep_pattern(ctx);
    }
    repair_pattern(ctx, rounded);

    PatternSearch search(ctx, problem.local_search_budget, problem.seed);
    search.consider(rounded);
    Pattern tp(std::size_t(ctx.E) * std::size_t(ctx.D), 1);
    search.consider(tp);
    search.consider(ep_pattern(ctx));
    for (int s = 0; s < 4; ++s) {
        Rng rng = Rng::stream(problem.seed, 0x900 + std::uint64_t(s));
        Pattern z(std::size_t(ctx.E) * std::size_t(ctx.D), 0);
        for (int i = 0; i < ctx.E; ++i) {
            const int spread = 1 + int(rng.below(2));
            for (int k = 0; k < spread; ++k)
                z[cell(i, int(rng.below(std::uint64_t(ctx.D))), ctx.D)] = 1;
        }
        repair_pattern(ctx, z);
        search.consider(z);
    }
    search.hill_climb();

    if (search.best().pattern.empty()) {
        // Load cap cannot be honored; relax it to the best achievable balance.
        Pattern z = ep_pattern(ctx);
        ShareSolution loose = solve_shares(ctx, z, false, false);
        if (!loose.feasible) throw std::runtime_error("node balance: solver failed to converge");
        report.status = SolveStatus::Fallback;
        report.notes.push_back("load cap relaxed by factor " +
                               std::to_string(std::max(1.0, loose.max_load / ctx.cap)));
        report.placement = loose.placement;
    } else {
        report.placement = search.best().shares.placement;
        report.status = rounding_exact &&
                                search.best().objective_s <=
                                    report.relaxation_bound_s * (1.0 + 1e-9) + 1e-15
                            ? SolveStatus::Optimal
                            : SolveStatus::Feasible;
    }

    LayerStats layer = problem.stats;
    report.objective_s = linearized_objective(report.placement, layer, problem.batch,
                                              problem.model, problem.mesh, problem.gamma);
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

SolveReport brute_force_node_balance(const NodeBalanceProblem& problem) {
    const auto start = std::chrono::steady_clock::now();
    const SolveContext ctx = make_context(problem);
    if (ctx.E * ctx.D > 12)
        throw std::invalid_argument("brute force: instance exceeds the enumeration bound");

    const int cells = ctx.E * ctx.D;
    SolveReport report;
    report.sub_solver = "simplex";
    double best = std::numeric_limits<double>::infinity();
    const bool want_floor = ctx.positive_freq_experts >= ctx.D;

    for (std::uint32_t mask = 1; mask < (1u << cells); ++mask) {
        Pattern z(std::size_t(cells), 0);
        for (int k = 0; k < cells; ++k) z[std::size_t(k)] = (mask >> k) & 1u;
        bool rows_ok = true;
        for (int i = 0; i < ctx.E && rows_ok; ++i) {
            bool any = false;
            for (int c = 0; c < ctx.D; ++c) any = any || z[cell(i, c, ctx.D)];
            rows_ok = any;
        }
        if (!rows_ok) continue;
        ShareSolution shares = solve_shares(ctx, z, true, want_floor);
        if (!shares.feasible) continue;
        const double obj = ctx.k_comp * shares.max_load +
                           2.0 * ctx.gamma * ctx.k_comm * pattern_comm_mass(ctx, z);
        if (obj < best - kImproveTol) {
            best = obj;
            report.placement = shares.placement;
        }
    }
    if (!std::isfinite(best)) throw std::runtime_error("brute force: no feasible pattern");
    report.status = SolveStatus::Optimal;
    report.objective_s = best;
    report.relaxation_bound_s = best;
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

Placement solve_node_balance_placement(const TraceStats& stats, double batch,
                                       const ModelSpec& model, const MeshSpec& mesh,
                                       double gamma, int local_search_budget,
                                       std::uint64_t seed,
                                       std::vector<SolveReport>* reports) {
    Placement placement;
    placement.strategy = Strategy::NodeBalance;
    for (std::size_t l = 0; l < stats.layers.size(); ++l) {
        NodeBalanceProblem problem;
        problem.stats = stats.layers[l];
        problem.batch = batch;
        problem.model = model;
        problem.mesh = mesh;
        problem.gamma = gamma;
        problem.local_search_budget = local_search_budget;
        problem.seed = splitmix64(seed ^ (0xabcd0000 + l));
        SolveReport report = solve_node_balance(problem);
        placement.layers.push_back(report.placement);
        if (reports) reports->push_back(std::move(report));
    }
    return placement;
}

}  // namespace moeplan
