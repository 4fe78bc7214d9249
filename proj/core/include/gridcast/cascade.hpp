#pragma once

#define GRIDCAST_FLOW_HEADERS_INCLUDED 1

#include <cstdint>
#include <utility>
#include <vector>

#include "gridcast/network.hpp"
#include "gridcast/opf.hpp"
#include "gridcast/sample.hpp"

namespace gridcast {

// Per-step record exposed for tests and debugging; pool files carry only
// the CascadeSample.
struct CascadeStep {
    FlowSolution flow;
    std::vector<int> overloaded;
};

struct CascadeDiagnostics {
    std::vector<CascadeStep> steps;
};

// Proportional balancing used when no corrective action is taken: on a
// capacity shortage every island bus sheds the same fraction; on a surplus
// every generator curtails the same fraction of its above-minimum
// headroom; an island that cannot balance at all blacks out.
void balance_proportional(const Network& net, const IslandPartition& part,
                          const std::vector<double>& demand, std::vector<double>& dispatch,
                          std::vector<double>& served);

// Simulates one cascade. The two initial branch failures are applied to
// the fully healthy network; each step rebalances per island under the
// policy, solves DC flow, and trips every branch above its short-term
// rating simultaneously. A terminal step that still sheds load is
// recorded by repeating the final state once, so l and shed_mw always
// cover every interval in which service was reduced.
//
// rng_seed is recorded for provenance; the oracle itself is deterministic.
CascadeSample run_cascade(const Network& net, const LoadingProfile& profile,
                          std::pair<int, int> initial_failures, Policy policy, uint64_t rng_seed,
                          const SolverConfig& cfg = {}, CascadeDiagnostics* diag = nullptr);

struct PoolConfig {
    int n_samples = 300;
    double split_fraction = 0.9;
    unsigned threads = 0;
    SolverConfig solver;
};

// Monte Carlo pool: initial pairs drawn uniformly over all C(N_br, 2)
// unordered pairs, one independent RNG stream per sample derived from the
// master seed, results ordered by sample_id regardless of thread count.
SamplePool generate_pool(const Network& net, const LoadingProfile& profile, Policy policy,
                         uint64_t master_seed, const PoolConfig& cfg = {});

}  // namespace gridcast
