#include "gridcast/powerflow.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace gridcast {

IslandPartition partition_islands(const Network& net, const std::vector<uint8_t>& alive) {
    const int n = net.n_buses();
    if (static_cast<int>(alive.size()) != net.n_branches())
        throw std::invalid_argument("partition_islands: alive vector size mismatch");
    IslandPartition part;
    part.component.assign(n, -1);

    std::vector<std::vector<int>> adj(n);
    for (const auto& br : net.branches) {
        if (!alive[br.id]) continue;
        adj[br.from_bus].push_back(br.id);
        adj[br.to_bus].push_back(br.id);
    }
    int comp = 0;
    for (int start = 0; start < n; ++start) {
        if (part.component[start] >= 0) continue;
        std::deque<int> q{start};
        part.component[start] = comp;
        while (!q.empty()) {
            const int u = q.front();
            q.pop_front();
            for (int b : adj[u]) {
                const int v = net.branches[b].from_bus == u ? net.branches[b].to_bus
                                                            : net.branches[b].from_bus;
                if (part.component[v] < 0) {
                    part.component[v] = comp;
                    q.push_back(v);
                }
            }
        }
        ++comp;
    }
    part.island_buses.resize(comp);
    part.island_branches.resize(comp);
    part.island_gens.resize(comp);
    for (int u = 0; u < n; ++u) part.island_buses[part.component[u]].push_back(u);
    for (const auto& br : net.branches)
        if (alive[br.id]) part.island_branches[part.component[br.from_bus]].push_back(br.id);
    for (const auto& g : net.generators) part.island_gens[part.component[g.bus]].push_back(g.id);
    return part;
}

int island_slack(const Network& net, const std::vector<int>& island_buses,
                 const std::vector<int>& island_gens) {
    if (!island_gens.empty()) {
        int best = net.n_buses();
        for (int g : island_gens) best = std::min(best, net.generators[g].bus);
        return best;
    }
    return island_buses.front();
}

namespace {

// Solve B' theta = P for one island; returns absolute angles with the
// slack at zero.
void solve_island_angles(const Network& net, const std::vector<int>& island_buses,
                         const std::vector<int>& island_branches, int slack,
                         const std::vector<double>& injection_mw, std::vector<double>& theta) {
    const std::size_t nb = island_buses.size();
    if (nb == 1) {
        theta[island_buses[0]] = 0.0;
        return;
    }
    // Local indices excluding the slack.
    std::vector<int> local(net.n_buses(), -1);
    int idx = 0;
    for (int bus : island_buses)
        if (bus != slack) local[bus] = idx++;

    Matrix b(nb - 1, nb - 1);
    std::vector<double> rhs(nb - 1, 0.0);
    for (int br_id : island_branches) {
        const Branch& br = net.branches[br_id];
        const double y = 1.0 / br.reactance;
        const int f = br.from_bus, t = br.to_bus;
        const int lf = local[f], lt = local[t];
        if (lf >= 0) b(lf, lf) += y;
        if (lt >= 0) b(lt, lt) += y;
        if (lf >= 0 && lt >= 0) {
            b(lf, lt) -= y;
            b(lt, lf) -= y;
        }
    }
    for (int bus : island_buses)
        if (bus != slack) rhs[local[bus]] = injection_mw[bus] / net.base_mva;

    std::vector<double> x;
    try {
        x = solve_linear(std::move(b), std::move(rhs));
    } catch (const std::runtime_error&) {
        throw std::runtime_error("dc_pf: singular susceptance matrix (modeling bug)");
    }
    theta[slack] = 0.0;
    for (int bus : island_buses)
        if (bus != slack) theta[bus] = x[local[bus]];
}

}  // namespace

FlowSolution dc_pf(const Network& net, const std::vector<uint8_t>& alive,
                   const std::vector<double>& demand, const std::vector<double>& dispatch,
                   const SolverConfig& cfg) {
    const int n = net.n_buses();
    if (static_cast<int>(demand.size()) != n || static_cast<int>(dispatch.size()) != net.n_generators())
        throw std::invalid_argument("dc_pf: input size mismatch");

    const IslandPartition part = partition_islands(net, alive);

    std::vector<double> injection(n, 0.0);
    for (int i = 0; i < n; ++i) injection[i] = -demand[i];
    for (const auto& g : net.generators) injection[g.bus] += dispatch[g.id];

    for (int k = 0; k < part.n_islands(); ++k) {
        double mismatch = 0.0;
        for (int bus : part.island_buses[k]) mismatch += injection[bus];
        if (std::fabs(mismatch) > cfg.balance_tol)
            throw std::invalid_argument("dc_pf: island " + std::to_string(k) +
                                        " is unbalanced by " + std::to_string(mismatch) + " MW");
    }

    FlowSolution sol;
    sol.theta.assign(n, 0.0);
    sol.branch_flow.assign(net.n_branches(), 0.0);
    sol.gen_dispatch = dispatch;
    sol.served_load = demand;

    for (int k = 0; k < part.n_islands(); ++k) {
        const int slack = island_slack(net, part.island_buses[k], part.island_gens[k]);
        solve_island_angles(net, part.island_buses[k], part.island_branches[k], slack, injection,
                            sol.theta);
    }
    for (const auto& br : net.branches)
        if (alive[br.id])
            sol.branch_flow[br.id] =
                net.base_mva * (sol.theta[br.from_bus] - sol.theta[br.to_bus]) / br.reactance;
    return sol;
}

Matrix injection_shift_matrix(const Network& net, const std::vector<int>& island_buses,
                              const std::vector<int>& island_branches, int slack_bus) {
    const std::size_t nb = island_buses.size();
    const std::size_t nbr = island_branches.size();
    Matrix isf(nbr, nb);
    if (nb <= 1 || nbr == 0) return isf;

    std::vector<double> injection(net.n_buses(), 0.0);
    std::vector<double> theta(net.n_buses(), 0.0);
    for (std::size_t col = 0; col < nb; ++col) {
        const int bus = island_buses[col];
        if (bus == slack_bus) continue;  // slack column stays zero
        injection[bus] = 1.0;
        injection[slack_bus] = -1.0;
        solve_island_angles(net, island_buses, island_branches, slack_bus, injection, theta);
        for (std::size_t row = 0; row < nbr; ++row) {
            const Branch& br = net.branches[island_branches[row]];
            isf(row, col) = net.base_mva * (theta[br.from_bus] - theta[br.to_bus]) / br.reactance;
        }
        injection[bus] = 0.0;
        injection[slack_bus] = 0.0;
    }
    return isf;
}

}  // namespace gridcast
