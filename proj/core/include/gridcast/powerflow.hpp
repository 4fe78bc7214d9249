#pragma once

#define GRIDCAST_FLOW_HEADERS_INCLUDED 1

#include <cstdint>
#include <vector>

#include "gridcast/linalg.hpp"
#include "gridcast/network.hpp"

namespace gridcast {

struct SolverConfig {
    double feasibility_tol = 1e-7;
    double optimality_tol = 1e-7;
    double sigma_tol = 1e-6;     // bisection width for uniform service scaling
    double balance_tol = 1e-6;   // MW, per-island input balance check
};

// Partition induced by the alive-branch set.
struct IslandPartition {
    std::vector<int> component;                    // per bus
    std::vector<std::vector<int>> island_buses;
    std::vector<std::vector<int>> island_branches; // alive branches only
    std::vector<std::vector<int>> island_gens;

    int n_islands() const { return static_cast<int>(island_buses.size()); }
};

IslandPartition partition_islands(const Network& net, const std::vector<uint8_t>& alive);

struct FlowSolution {
    std::vector<double> theta;         // rad, slack = 0 per island
    std::vector<double> branch_flow;   // MW signed from->to, 0 for dead branches
    std::vector<double> gen_dispatch;  // MW
    std::vector<double> served_load;   // MW
    bool feasible = true;
    double sigma = 1.0;                // total served / total demand under scaling
    bool fallback_engaged = false;     // full service was infeasible before scaling
};

// Slack bus of an island: lowest-indexed bus hosting a generator, else the
// lowest-indexed bus.
int island_slack(const Network& net, const std::vector<int>& island_buses,
                 const std::vector<int>& island_gens);

// Plain DC power flow: solves the reduced susceptance system per island
// with the island slack pinned at angle zero. The caller must supply a
// balanced served-demand/dispatch pair per island.
FlowSolution dc_pf(const Network& net, const std::vector<uint8_t>& alive,
                   const std::vector<double>& demand, const std::vector<double>& dispatch,
                   const SolverConfig& cfg = {});

// MW-injection-to-MW-flow sensitivity for one island (rows follow
// island_branches order, columns island_buses order).
Matrix injection_shift_matrix(const Network& net, const std::vector<int>& island_buses,
                              const std::vector<int>& island_branches, int slack_bus);

}  // namespace gridcast
