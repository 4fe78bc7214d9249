#pragma once

#include <string>
#include <vector>

namespace gridcast {

// Bus, branch and generator indices are 0-based everywhere in memory.
// File formats and the CLI/API use the 1-based external ids.

struct Bus {
    int id = 0;               // 0-based internal index
    double load_p = 0.0;      // base demand, MW
    double shed_priority = 1.0;  // cost per MW shed
    bool is_slack = false;
};

struct Branch {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    double reactance = 0.0;    // p.u., > 0
    double rating_long = 0.0;  // MW
    double cost_weight = 0.0;  // proportional to rating_long by default

    // Short-term thermal limit is always derived, never stored.
    double rating_short() const { return 1.05 * rating_long; }
};

struct Generator {
    int id = 0;
    int bus = 0;
    double p_max = 0.0;
    double p_min = 0.0;
    double cost = 0.0;  // per-MW dispatch cost
};

struct Network {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;
    double base_mva = 100.0;

    int n_buses() const { return static_cast<int>(buses.size()); }
    int n_branches() const { return static_cast<int>(branches.size()); }
    int n_generators() const { return static_cast<int>(generators.size()); }

    std::vector<double> demand() const;          // load_p per bus
    std::vector<double> shed_priorities() const; // per bus
    std::vector<double> branch_cost_weights() const;
    double total_load() const;
    double total_gen_capacity() const;

    // Generators attached to each bus.
    std::vector<std::vector<int>> generators_by_bus() const;
    // Branches incident to each bus.
    std::vector<std::vector<int>> branches_by_bus() const;

    // Throws std::invalid_argument when a type invariant is violated
    // (dangling endpoints, nonpositive reactance, duplicate ids,
    // disconnected graph at full health, ...).
    void validate() const;

    bool operator==(const Network& o) const;
};

struct LoadingProfile {
    double c = 1.0;
};

// Returns a copy with every bus demand multiplied by profile.c.
Network scale_loads(const Network& net, const LoadingProfile& profile);

// Unweighted geodesic distance between branches in the line graph
// (branches adjacent iff they share a bus). Disconnected pairs get the
// finite sentinel N_br so downstream sums stay well-defined.
// Returned as a flat row-major N_br x N_br vector of doubles.
std::vector<double> line_graph_distance(const Network& net);

}  // namespace gridcast
