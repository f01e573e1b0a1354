// SPDX-License-Identifier: Apache-2.0
#include "moeplan/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace moeplan {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;

class Tableau {
public:
    Tableau(const LpProblem& p) : n_(p.num_vars), m_(int(p.rows.size())) {
        // slack/surplus for every inequality, one artificial per row that
        // lacks a ready basic column
        for (const LpProblem::Row& row : p.rows) {
            if (int(row.coeffs.size()) != n_)
                throw std::invalid_argument("solve_lp: row width mismatch");
            if (row.relation != LpRelation::Equal) ++num_slack_;
        }
        total_ = n_ + num_slack_ + m_;  // worst case: artificial in every row
        a_.assign(std::size_t(m_), std::vector<double>(std::size_t(total_) + 1, 0.0));
        basis_.assign(std::size_t(m_), -1);

        int slack_at = n_;
        int art_at = n_ + num_slack_;
        first_artificial_ = art_at;
        for (int i = 0; i < m_; ++i) {
            const LpProblem::Row& row = p.rows[std::size_t(i)];
            double sign = row.rhs < 0.0 ? -1.0 : 1.0;
            for (int j = 0; j < n_; ++j) a_[i][std::size_t(j)] = sign * row.coeffs[std::size_t(j)];
            rhs(i) = sign * row.rhs;
            LpRelation rel = row.relation;
            if (sign < 0.0) {
                if (rel == LpRelation::LessEqual) rel = LpRelation::GreaterEqual;
                else if (rel == LpRelation::GreaterEqual) rel = LpRelation::LessEqual;
            }
            if (rel == LpRelation::LessEqual) {
                a_[i][std::size_t(slack_at)] = 1.0;
                basis_[std::size_t(i)] = slack_at++;
            } else {
                if (rel == LpRelation::GreaterEqual) a_[i][std::size_t(slack_at++)] = -1.0;
                a_[i][std::size_t(art_at)] = 1.0;
                basis_[std::size_t(i)] = art_at++;
            }
        }
        num_artificial_ = art_at - first_artificial_;
        total_ = art_at;
    }

    LpStatus run(const std::vector<double>& objective, std::vector<double>& x, double& value) {
        if (num_artificial_ > 0) {
            std::vector<double> phase1(std::size_t(total_), 0.0);
            for (int j = first_artificial_; j < total_; ++j) phase1[std::size_t(j)] = 1.0;
            LpStatus s = optimize(phase1, total_);
            if (s != LpStatus::Optimal) return s == LpStatus::Unbounded ? LpStatus::Infeasible : s;
            if (objective_value(phase1) > kFeasTol) return LpStatus::Infeasible;
            expel_artificials();
        }
        std::vector<double> cost(std::size_t(total_), 0.0);
        for (int j = 0; j < n_ && j < int(objective.size()); ++j)
            cost[std::size_t(j)] = objective[std::size_t(j)];
        LpStatus s = optimize(cost, first_artificial_);
        if (s != LpStatus::Optimal) return s;
        x.assign(std::size_t(n_), 0.0);
        for (int i = 0; i < m_; ++i)
            if (basis_[std::size_t(i)] < n_) x[std::size_t(basis_[std::size_t(i)])] = rhs(i);
        value = objective_value(cost);
        return LpStatus::Optimal;
    }

private:
    double& rhs(int i) { return a_[std::size_t(i)][std::size_t(total_)]; }
    double rhs_at(int i) const { return a_[std::size_t(i)][std::size_t(total_)]; }

    double objective_value(const std::vector<double>& cost) const {
        double v = 0.0;
        for (int i = 0; i < m_; ++i) v += cost[std::size_t(basis_[std::size_t(i)])] * rhs_at(i);
        return v;
    }

    void reduced_costs(const std::vector<double>& cost, std::vector<double>& rc) const {
        rc.assign(std::size_t(total_), 0.0);
        std::vector<double> cb(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i) cb[std::size_t(i)] = cost[std::size_t(basis_[std::size_t(i)])];
        for (int j = 0; j < total_; ++j) {
            double dot = 0.0;
            for (int i = 0; i < m_; ++i) dot += cb[std::size_t(i)] * a_[std::size_t(i)][std::size_t(j)];
            rc[std::size_t(j)] = cost[std::size_t(j)] - dot;
        }
    }

    void pivot(int row, int col) {
        std::vector<double>& pr = a_[std::size_t(row)];
        const double pv = pr[std::size_t(col)];
        for (double& v : pr) v /= pv;
        for (int i = 0; i < m_; ++i) {
            if (i == row) continue;
            std::vector<double>& r = a_[std::size_t(i)];
            const double factor = r[std::size_t(col)];
            if (std::abs(factor) < 1e-300) continue;
            for (int j = 0; j <= total_; ++j) r[std::size_t(j)] -= factor * pr[std::size_t(j)];
            r[std::size_t(col)] = 0.0;
        }
        basis_[std::size_t(row)] = col;
    }

    // Minimize cost over columns [0, usable_cols). Artificials are excluded
    // from entering once phase 1 is done.
    LpStatus optimize(const std::vector<double>& cost, int usable_cols) {
        std::vector<double> rc;
        const long max_iter = 200L * (m_ + total_) + 2000;
        long stall = 0;
        double last = std::numeric_limits<double>::infinity();
        for (long iter = 0; iter < max_iter; ++iter) {
            reduced_costs(cost, rc);
            int enter = -1;
            bool bland = stall > m_ + 50;
            double best = -kPivotTol;
            for (int j = 0; j < usable_cols; ++j) {
                if (rc[std::size_t(j)] < best) {
                    enter = j;
                    if (bland) break;
                    best = rc[std::size_t(j)];
                }
            }
            if (enter < 0) return LpStatus::Optimal;

            int leave = -1;
            double best_ratio = 0.0;
            for (int i = 0; i < m_; ++i) {
                const double aij = a_[std::size_t(i)][std::size_t(enter)];
                if (aij > kPivotTol) {
                    const double ratio = rhs_at(i) / aij;
                    if (leave < 0 || ratio < best_ratio - kPivotTol ||
                        (ratio < best_ratio + kPivotTol &&
                         basis_[std::size_t(i)] < basis_[std::size_t(leave)])) {
                        leave = i;
                        best_ratio = ratio;
                    }
                }
            }
            if (leave < 0) return LpStatus::Unbounded;
            pivot(leave, enter);

            const double v = objective_value(cost);
            if (v < last - 1e-12) { last = v; stall = 0; } else { ++stall; }
        }
        return LpStatus::IterationLimit;
    }

    // After phase 1, pivot still-basic artificials onto any usable column or
    // drop their (redundant) rows.
    void expel_artificials() {
        for (int i = 0; i < m_; ++i) {
            if (basis_[std::size_t(i)] < first_artificial_) continue;
            int col = -1;
            for (int j = 0; j < first_artificial_; ++j) {
                if (std::abs(a_[std::size_t(i)][std::size_t(j)]) > kPivotTol) { col = j; break; }
            }
            if (col >= 0) {
                pivot(i, col);
            } else {
                for (int j = 0; j <= total_; ++j) a_[std::size_t(i)][std::size_t(j)] = 0.0;
                a_[std::size_t(i)][std::size_t(basis_[std::size_t(i)])] = 1.0;
            }
        }
    }

    int n_ = 0;
    int m_ = 0;
    int num_slack_ = 0;
    int num_artificial_ = 0;
    int first_artificial_ = 0;
    int total_ = 0;
    std::vector<std::vector<double>> a_;
    std::vector<int> basis_;
};

}  // namespace

LpSolution solve_lp(const LpProblem& problem) {
    if (problem.num_vars <= 0) throw std::invalid_argument("solve_lp: no variables");
    Tableau tableau(problem);
    LpSolution sol;
    sol.status = tableau.run(problem.objective, sol.x, sol.objective);
    return sol;
}

}  // namespace moeplan
