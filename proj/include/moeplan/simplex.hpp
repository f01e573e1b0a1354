// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace moeplan {

enum class LpRelation { LessEqual, GreaterEqual, Equal };

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

// min c'x subject to the given rows and x >= 0. Rows are dense.
struct LpProblem {
    int num_vars = 0;
    std::vector<double> objective;

    struct Row {
        std::vector<double> coeffs;
        LpRelation relation = LpRelation::LessEqual;
        double rhs = 0.0;
    };
    std::vector<Row> rows;

    void add_row(std::vector<double> coeffs, LpRelation relation, double rhs) {
        rows.push_back(Row{std::move(coeffs), relation, rhs});
    }
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
};

// Dense two-phase primal simplex. Dantzig pricing with a Bland fallback after
// a stall, deterministic tie-breaking throughout.
LpSolution solve_lp(const LpProblem& problem);

}  // namespace moeplan
