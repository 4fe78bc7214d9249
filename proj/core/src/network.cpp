#include "gridcast/network.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>
#include <string>

namespace gridcast {

std::vector<double> Network::demand() const {
    std::vector<double> d(buses.size());
    for (std::size_t i = 0; i < buses.size(); ++i) d[i] = buses[i].load_p;
    return d;
}

std::vector<double> Network::shed_priorities() const {
    std::vector<double> p(buses.size());
    for (std::size_t i = 0; i < buses.size(); ++i) p[i] = buses[i].shed_priority;
    return p;
}

std::vector<double> Network::branch_cost_weights() const {
    std::vector<double> w(branches.size());
    for (std::size_t i = 0; i < branches.size(); ++i) w[i] = branches[i].cost_weight;
    return w;
}

double Network::total_load() const {
    double t = 0.0;
    for (const auto& b : buses) t += b.load_p;
    return t;
}

double Network::total_gen_capacity() const {
    double t = 0.0;
    for (const auto& g : generators) t += g.p_max;
    return t;
}

std::vector<std::vector<int>> Network::generators_by_bus() const {
    std::vector<std::vector<int>> out(buses.size());
    for (const auto& g : generators) out[g.bus].push_back(g.id);
    return out;
}

std::vector<std::vector<int>> Network::branches_by_bus() const {
    std::vector<std::vector<int>> out(buses.size());
    for (const auto& b : branches) {
        out[b.from_bus].push_back(b.id);
        out[b.to_bus].push_back(b.id);
    }
    return out;
}

void Network::validate() const {
    const int n = n_buses();
    if (n == 0) throw std::invalid_argument("network has no buses");
    for (int i = 0; i < n; ++i) {
        if (buses[i].id != i) throw std::invalid_argument("bus ids not dense");
        if (buses[i].load_p < 0) throw std::invalid_argument("negative load at bus " + std::to_string(i + 1));
        if (buses[i].shed_priority <= 0)
            throw std::invalid_argument("nonpositive shed priority at bus " + std::to_string(i + 1));
    }
    for (int b = 0; b < n_branches(); ++b) {
        const Branch& br = branches[b];
        if (br.id != b) throw std::invalid_argument("branch ids not dense");
        if (br.from_bus == br.to_bus)
            throw std::invalid_argument("branch " + std::to_string(b + 1) + " is a self-loop");
        if (br.from_bus < 0 || br.from_bus >= n || br.to_bus < 0 || br.to_bus >= n)
            throw std::invalid_argument("branch " + std::to_string(b + 1) + " references a nonexistent bus");
        if (br.reactance <= 0)
            throw std::invalid_argument("branch " + std::to_string(b + 1) + " has nonpositive reactance");
        if (br.rating_long <= 0)
            throw std::invalid_argument("branch " + std::to_string(b + 1) + " has nonpositive rating");
    }
    for (int g = 0; g < n_generators(); ++g) {
        const Generator& gen = generators[g];
        if (gen.id != g) throw std::invalid_argument("generator ids not dense");
        if (gen.bus < 0 || gen.bus >= n)
            throw std::invalid_argument("generator " + std::to_string(g + 1) + " references a nonexistent bus");
        if (gen.p_min < 0 || gen.p_min > gen.p_max)
            throw std::invalid_argument("generator " + std::to_string(g + 1) + " has invalid limits");
    }
    // Connectivity at full health.
    if (n > 1) {
        std::vector<char> seen(n, 0);
        std::deque<int> q{0};
        seen[0] = 1;
        auto adj = branches_by_bus();
        int count = 1;
        while (!q.empty()) {
            const int u = q.front();
            q.pop_front();
            for (int b : adj[u]) {
                const int v = branches[b].from_bus == u ? branches[b].to_bus : branches[b].from_bus;
                if (!seen[v]) {
                    seen[v] = 1;
                    ++count;
                    q.push_back(v);
                }
            }
        }
        if (count != n) throw std::invalid_argument("network graph is disconnected at full health");
    }
}

bool Network::operator==(const Network& o) const {
    if (base_mva != o.base_mva || buses.size() != o.buses.size() ||
        branches.size() != o.branches.size() || generators.size() != o.generators.size())
        return false;
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const Bus &a = buses[i], &b = o.buses[i];
        if (a.id != b.id || a.load_p != b.load_p || a.shed_priority != b.shed_priority ||
            a.is_slack != b.is_slack)
            return false;
    }
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const Branch &a = branches[i], &b = o.branches[i];
        if (a.id != b.id || a.from_bus != b.from_bus || a.to_bus != b.to_bus ||
            a.reactance != b.reactance || a.rating_long != b.rating_long ||
            a.cost_weight != b.cost_weight)
            return false;
    }
    for (std::size_t i = 0; i < generators.size(); ++i) {
        const Generator &a = generators[i], &b = o.generators[i];
        if (a.id != b.id || a.bus != b.bus || a.p_max != b.p_max || a.p_min != b.p_min ||
            a.cost != b.cost)
            return false;
    }
    return true;
}

Network scale_loads(const Network& net, const LoadingProfile& profile) {
    if (profile.c <= 0) throw std::invalid_argument("loading multiplier must be positive");
    Network out = net;
    for (auto& b : out.buses) b.load_p *= profile.c;
    return out;
}

std::vector<double> line_graph_distance(const Network& net) {
    const int m = net.n_branches();
    // Adjacency of the line graph via shared-bus incidence.
    std::vector<std::vector<int>> adj(m);
    auto by_bus = net.branches_by_bus();
    for (const auto& incident : by_bus) {
        for (std::size_t a = 0; a < incident.size(); ++a)
            for (std::size_t b = a + 1; b < incident.size(); ++b) {
                adj[incident[a]].push_back(incident[b]);
                adj[incident[b]].push_back(incident[a]);
            }
    }
    for (auto& neigh : adj) {
        std::sort(neigh.begin(), neigh.end());
        neigh.erase(std::unique(neigh.begin(), neigh.end()), neigh.end());
    }

    const double sentinel = static_cast<double>(m);
    std::vector<double> dist(static_cast<std::size_t>(m) * m, sentinel);
    std::vector<int> level(m);
    for (int src = 0; src < m; ++src) {
        std::fill(level.begin(), level.end(), -1);
        std::deque<int> q{src};
        level[src] = 0;
        while (!q.empty()) {
            const int u = q.front();
            q.pop_front();
            for (int v : adj[u])
                if (level[v] < 0) {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
        }
        for (int v = 0; v < m; ++v)
            if (level[v] >= 0) dist[static_cast<std::size_t>(src) * m + v] = level[v];
    }
    return dist;
}

}  // namespace gridcast
