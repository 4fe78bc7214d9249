#pragma once

#define GRIDCAST_FLOW_HEADERS_INCLUDED 1

#include "gridcast/powerflow.hpp"

namespace gridcast {

// Minimum-cost dispatch serving the full demand subject to balance, gen
// limits and short-term line ratings, per island. When full service is
// infeasible in an island, the largest uniform service scale sigma in
// [0,1] is found by bisection (width cfg.sigma_tol) and that island serves
// sigma * demand. Islands without generation black out (served 0).
FlowSolution dc_opf_full_service(const Network& net, const std::vector<uint8_t>& alive,
                                 const std::vector<double>& demand, const SolverConfig& cfg = {});

// Minimum-cost load shedding: per-bus shed variables in [0, demand],
// objective sum(priority * shed) plus a small dispatch-cost tie break,
// subject to balance, gen limits and short-term ratings. The returned
// solution respects every line limit.
FlowSolution dc_opf_smart_shed(const Network& net, const std::vector<uint8_t>& alive,
                               const std::vector<double>& demand,
                               const std::vector<double>& shed_priority,
                               const SolverConfig& cfg = {});

}  // namespace gridcast
