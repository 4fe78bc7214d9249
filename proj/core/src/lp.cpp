#include "gridcast/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gridcast {

namespace {

// Dense tableau simplex. Columns: structural | slack/surplus | artificial.
// Pivoting uses Dantzig's rule with lowest-index tie breaks and falls back
// to Bland's rule after a degenerate streak, so runs are deterministic and
// cycle-free.
class Tableau {
public:
    Tableau(const LpProblem& p, double eps) : eps_(eps), n_struct_(p.objective.size()) {
        const std::size_t m = p.rows.size();
        std::size_t n_slack = 0;
        for (const auto& row : p.rows)
            if (row.type == LpRowType::less_equal) ++n_slack;
        const std::size_t capacity = n_struct_ + n_slack + m + 1;
        tab_.assign(m, std::vector<double>(capacity, 0.0));
        basis_.assign(m, 0);
        artificial_start_ = n_struct_ + n_slack;
        rhs_col_ = capacity - 1;

        std::size_t slack_idx = n_struct_;
        n_artificial_ = 0;
        for (std::size_t r = 0; r < m; ++r) {
            const LpRow& row = p.rows[r];
            if (row.coeffs.size() != n_struct_)
                throw std::invalid_argument("lp: row width mismatch");
            const double sign = row.rhs < 0 ? -1.0 : 1.0;
            for (std::size_t c = 0; c < n_struct_; ++c) tab_[r][c] = sign * row.coeffs[c];
            tab_[r][rhs_col_] = sign * row.rhs;

            bool needs_artificial = true;
            if (row.type == LpRowType::less_equal) {
                tab_[r][slack_idx] = sign;  // slack when rhs >= 0, surplus otherwise
                if (sign > 0) {
                    basis_[r] = static_cast<int>(slack_idx);
                    needs_artificial = false;
                }
                ++slack_idx;
            }
            if (needs_artificial) {
                const std::size_t art = artificial_start_ + n_artificial_;
                tab_[r][art] = 1.0;
                basis_[r] = static_cast<int>(art);
                ++n_artificial_;
            }
        }
        n_cols_ = artificial_start_ + n_artificial_;
        in_basis_.assign(n_cols_, 0);
        for (int b : basis_) in_basis_[b] = 1;
    }

    double phase1() {
        std::vector<double> cost(n_cols_, 0.0);
        for (std::size_t c = artificial_start_; c < n_cols_; ++c) cost[c] = 1.0;
        run(cost, /*column_limit=*/n_cols_);
        double infeas = 0.0;
        for (std::size_t r = 0; r < tab_.size(); ++r)
            if (static_cast<std::size_t>(basis_[r]) >= artificial_start_) infeas += rhs(r);
        drive_out_artificials();
        return infeas;
    }

    bool phase2(const std::vector<double>& objective) {
        std::vector<double> cost(n_cols_, 0.0);
        for (std::size_t c = 0; c < n_struct_ && c < objective.size(); ++c) cost[c] = objective[c];
        return run(cost, /*column_limit=*/artificial_start_);
    }

    std::vector<double> solution() const {
        std::vector<double> x(n_struct_, 0.0);
        for (std::size_t r = 0; r < tab_.size(); ++r)
            if (static_cast<std::size_t>(basis_[r]) < n_struct_) x[basis_[r]] = rhs(r);
        return x;
    }

private:
    double rhs(std::size_t r) const { return tab_[r][rhs_col_]; }

    void pivot(std::size_t row, std::size_t col) {
        auto& prow = tab_[row];
        const double p = prow[col];
        for (auto& v : prow) v /= p;
        for (std::size_t r = 0; r < tab_.size(); ++r) {
            if (r == row) continue;
            const double f = tab_[r][col];
            if (f == 0.0) continue;
            auto& trow = tab_[r];
            for (std::size_t c = 0; c <= rhs_col_; ++c) trow[c] -= f * prow[c];
            trow[col] = 0.0;
        }
        in_basis_[basis_[row]] = 0;
        in_basis_[col] = 1;
        basis_[row] = static_cast<int>(col);
    }

    bool run(const std::vector<double>& cost, std::size_t column_limit) {
        const std::size_t m = tab_.size();
        std::vector<double> cb(m);
        int degenerate_streak = 0;
        for (;;) {
            for (std::size_t r = 0; r < m; ++r) cb[r] = cost[basis_[r]];
            const bool bland = degenerate_streak > 50;
            int entering = -1;
            double most_negative = -eps_;
            for (std::size_t c = 0; c < column_limit; ++c) {
                if (in_basis_[c]) continue;
                double reduced = cost[c];
                for (std::size_t r = 0; r < m; ++r)
                    if (cb[r] != 0.0) reduced -= cb[r] * tab_[r][c];
                if (reduced < most_negative) {
                    entering = static_cast<int>(c);
                    if (bland) break;  // lowest index wins
                    most_negative = reduced;
                }
            }
            if (entering < 0) return true;  // optimal

            int leaving = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < m; ++r) {
                const double a = tab_[r][entering];
                if (a > eps_) {
                    const double ratio = rhs(r) / a;
                    if (ratio < best_ratio - 1e-12 ||
                        (ratio <= best_ratio + 1e-12 &&
                         (leaving < 0 || basis_[r] < basis_[leaving]))) {
                        best_ratio = std::min(best_ratio, ratio);
                        leaving = static_cast<int>(r);
                    }
                }
            }
            if (leaving < 0) return false;  // unbounded
            degenerate_streak = best_ratio <= eps_ ? degenerate_streak + 1 : 0;
            pivot(static_cast<std::size_t>(leaving), static_cast<std::size_t>(entering));
        }
    }

    // Pivot artificials lingering in the basis at level zero out of it.
    void drive_out_artificials() {
        for (std::size_t r = 0; r < tab_.size(); ++r) {
            if (static_cast<std::size_t>(basis_[r]) < artificial_start_) continue;
            if (rhs(r) > eps_) continue;  // genuine infeasibility, reported by phase1
            for (std::size_t c = 0; c < artificial_start_; ++c)
                if (std::fabs(tab_[r][c]) > eps_) {
                    pivot(r, c);
                    break;
                }
        }
    }

    double eps_;
    std::size_t n_struct_;
    std::size_t n_cols_ = 0;
    std::size_t artificial_start_ = 0;
    std::size_t n_artificial_ = 0;
    std::size_t rhs_col_ = 0;
    std::vector<std::vector<double>> tab_;
    std::vector<int> basis_;
    std::vector<char> in_basis_;
};

}  // namespace

LpResult solve_lp(const LpProblem& problem, double eps) {
    LpResult result;
    Tableau tab(problem, eps);
    if (tab.phase1() > 1e-7) {
        result.status = LpStatus::infeasible;
        return result;
    }
    if (!tab.phase2(problem.objective)) {
        result.status = LpStatus::unbounded;
        return result;
    }
    result.status = LpStatus::optimal;
    result.x = tab.solution();
    for (std::size_t i = 0; i < problem.objective.size(); ++i)
        result.objective += problem.objective[i] * result.x[i];
    return result;
}

bool lp_feasible(const LpProblem& problem, double eps) {
    Tableau tab(problem, eps);
    return tab.phase1() <= 1e-7;
}

}  // namespace gridcast
