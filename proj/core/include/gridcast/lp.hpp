#pragma once

#define GRIDCAST_FLOW_HEADERS_INCLUDED 1

#include <vector>

namespace gridcast {

// Small dense LP solver for the per-island OPF subproblems (tens of
// variables). Two-phase primal simplex with Bland's rule: deterministic
// and cycle-free, which keeps pool generation reproducible bit for bit.
//
//   minimize c^T x   subject to  row_i: a_i^T x (<=|=) b_i,  x >= 0

enum class LpRowType { less_equal, equal };
enum class LpStatus { optimal, infeasible, unbounded };

struct LpRow {
    std::vector<double> coeffs;
    double rhs = 0.0;
    LpRowType type = LpRowType::less_equal;
};

struct LpProblem {
    std::vector<double> objective;
    std::vector<LpRow> rows;

    void add_row(std::vector<double> coeffs, double rhs, LpRowType type) {
        rows.push_back({std::move(coeffs), rhs, type});
    }
};

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> x;
    double objective = 0.0;
};

LpResult solve_lp(const LpProblem& problem, double eps = 1e-9);

// Phase-1 only: is the constraint set nonempty?
bool lp_feasible(const LpProblem& problem, double eps = 1e-9);

}  // namespace gridcast
