#pragma once

#include <utility>
#include <vector>

#include "gridcast/influence.hpp"
#include "gridcast/linalg.hpp"
#include "gridcast/sample.hpp"

namespace gridcast {

// Transition-probability estimation by Monte Carlo counting over the
// training split. Entries with an empty denominator default to 1 for the
// alive-conditioned matrices and 0.5 for the dead-conditioned ones, so
// unobserved alive links never spuriously predict failure.
constexpr double kDefaultAliveProb = 1.0;
constexpr double kDefaultDeadProb = 0.5;

std::pair<Matrix, Matrix> estimate_A(const SamplePool& pool);  // (A11, A01)
std::pair<Matrix, Matrix> estimate_B(const SamplePool& pool);  // (B11, B01)

struct SimplexFitOptions {
    double convergence_decrease = 1e-10;
    int max_iterations = 10000;
};

struct SimplexFitResult {
    Matrix weights;           // row-stochastic
    std::vector<double> objectives;  // final objective per row subproblem
    bool converged = true;    // all subproblems hit the decrease criterion
};

// Least-squares objective of one influenced entity's incoming weight
// vector over its simplex, as minimized by the fitters. Exposed so tests
// can compare the solver against grid-search oracles.
struct SimplexQuadratic {
    Matrix gram;              // sum of m m^T over data rows
    std::vector<double> cross;  // sum of target * m
    double target_sq = 0.0;   // sum of target^2
    double scale = 1.0;       // 1/K normalization

    double value(const std::vector<double>& w) const;
    std::vector<double> gradient(const std::vector<double>& w) const;
};

// Build the subproblem for influenced link i (fit_D) or bus i (fit_E).
SimplexQuadratic link_fit_problem(const SamplePool& pool, const Matrix& a11, const Matrix& a01,
                                  int link);
SimplexQuadratic shed_fit_problem(const SamplePool& pool, const Matrix& b11, const Matrix& b01,
                                  int bus);

// Projected gradient with exact Euclidean simplex projection and
// backtracking line search; the objective never increases. `init` empty
// means the uniform point.
std::pair<std::vector<double>, bool> minimize_on_simplex(const SimplexQuadratic& q,
                                                         std::size_t dim,
                                                         const SimplexFitOptions& opts = {},
                                                         std::vector<double> init = {});

SimplexFitResult fit_D(const SamplePool& pool, const Matrix& a11, const Matrix& a01,
                       const SimplexFitOptions& opts = {});
SimplexFitResult fit_E(const SamplePool& pool, const Matrix& b11, const Matrix& b01,
                       const SimplexFitOptions& opts = {});

std::vector<ThresholdEntry> build_threshold_pool_D(const SamplePool& pool,
                                                   const InfluenceModelD& model);
std::vector<ThresholdEntry> build_threshold_pool_E(const SamplePool& pool,
                                                   const InfluenceModelE& model);

struct ThresholdSelection {
    std::vector<double> thresholds;
    double used_loading = 1.0;
    bool loading_fallback = false;  // no entry at the queried level; nearest used
};

// Step-3 selection: restrict to the queried loading level, pick the entry
// whose initial state is L1-closest to the query, and break ties with the
// lower median per entity. The overload with a ThresholdIndex scans the
// flat copy instead of the entries and returns identical results.
ThresholdSelection select_threshold(const std::vector<ThresholdEntry>& pool, double loading_c,
                                    const std::vector<uint8_t>& initial_state);
ThresholdSelection select_threshold(const std::vector<ThresholdEntry>& pool,
                                    const ThresholdIndex& index, double loading_c,
                                    const std::vector<uint8_t>& initial_state);

// Exact Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(std::vector<double> v);

struct TrainOptions {
    double alpha_d = 0.9;
    double alpha_e = 0.9;
    SimplexFitOptions fit;
    unsigned threads = 0;
};

// Full training pass over the pool's training split.
InfluenceModel train_model(const SamplePool& pool, const TrainOptions& opts = {});

}  // namespace gridcast
