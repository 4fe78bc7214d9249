#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gridcast/linalg.hpp"
#include "gridcast/lp.hpp"
#include "gridcast/network.hpp"
#include "gridcast/rng.hpp"
#include "gridcast/sample.hpp"

namespace testutil {

using namespace gridcast;

#ifndef GRIDCAST_SOURCE_DIR
#define GRIDCAST_SOURCE_DIR "."
#endif

inline std::string data_file(const std::string& name) {
    return std::string(GRIDCAST_SOURCE_DIR) + "/data/" + name;
}

// --- toy networks -------------------------------------------------------

inline Network two_bus(double x = 0.1, double rating = 100.0, double load = 50.0,
                       double p_max = 100.0) {
    Network net;
    net.base_mva = 100.0;
    net.buses = {{0, 0.0, 1.0, true}, {1, load, 1.0, false}};
    net.branches = {{0, 0, 1, x, rating, rating}};
    net.generators = {{0, 0, p_max, 0.0, 1.0}};
    return net;
}

// Ring 0-1, 1-2, 0-2 with equal reactances.
inline Network three_bus_ring(double injection = 90.0) {
    Network net;
    net.base_mva = 100.0;
    net.buses = {{0, 0.0, 1.0, true}, {1, 0.0, 1.0, false}, {2, injection, 1.0, false}};
    net.branches = {{0, 0, 1, 0.1, 200.0, 200.0},
                    {1, 1, 2, 0.1, 200.0, 200.0},
                    {2, 0, 2, 0.1, 200.0, 200.0}};
    net.generators = {{0, 0, 2.0 * injection, 0.0, 1.0}};
    return net;
}

// Two generators, two load buses, enough structure for meaningful OPF.
inline Network four_bus() {
    Network net;
    net.base_mva = 100.0;
    net.buses = {{0, 0.0, 1.0, true},
                 {1, 60.0, 1.0, false},
                 {2, 40.0, 2.0, false},
                 {3, 0.0, 1.0, false}};
    net.branches = {{0, 0, 1, 0.1, 50.0, 50.0},
                    {1, 1, 2, 0.2, 40.0, 40.0},
                    {2, 2, 3, 0.1, 50.0, 50.0},
                    {3, 0, 3, 0.2, 60.0, 60.0},
                    {4, 0, 2, 0.3, 30.0, 30.0}};
    net.generators = {{0, 0, 90.0, 0.0, 2.0}, {1, 3, 60.0, 0.0, 5.0}};
    return net;
}

// Random connected network for property tests.
inline Network random_network(Rng& rng, int n_buses = 0) {
    Network net;
    net.base_mva = 100.0;
    const int n = n_buses > 0 ? n_buses : 3 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n; ++i)
        net.buses.push_back({i, rng.unit() < 0.3 ? 0.0 : 10.0 + 40.0 * rng.unit(), 1.0, i == 0});
    int id = 0;
    for (int i = 1; i < n; ++i) {  // spanning tree
        const int parent = static_cast<int>(rng.below(i));
        net.branches.push_back(
            {id++, parent, i, 0.05 + 0.4 * rng.unit(), 30.0 + 80.0 * rng.unit(), 0.0});
    }
    const int extra = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
    for (int e = 0; e < extra; ++e) {
        const int a = static_cast<int>(rng.below(n));
        const int b = static_cast<int>(rng.below(n));
        if (a == b) continue;
        net.branches.push_back(
            {id++, a, b, 0.05 + 0.4 * rng.unit(), 30.0 + 80.0 * rng.unit(), 0.0});
    }
    for (auto& br : net.branches) br.cost_weight = br.rating_long;
    const int n_gens = 1 + static_cast<int>(rng.below(2));
    for (int g = 0; g < n_gens; ++g)
        net.generators.push_back(
            {g, static_cast<int>(rng.below(n)), 60.0 + 120.0 * rng.unit(), 0.0, 1.0 + rng.unit()});
    return net;
}

// --- random monotone pools ----------------------------------------------

// Arbitrary monotone cascade sample; states/l/shed are structurally valid
// but do not come from any flow model.
inline CascadeSample random_sample(Rng& rng, int n_links, int n_buses, int64_t id) {
    CascadeSample s;
    s.sample_id = id;
    s.loading_c = 1.0 + 0.1 * static_cast<double>(rng.below(4));
    const int a = static_cast<int>(rng.below(n_links));
    int b = static_cast<int>(rng.below(n_links));
    if (b == a) b = (a + 1) % n_links;
    s.initial_failures = {std::min(a, b), std::max(a, b)};
    std::vector<uint8_t> state(n_links, 1);
    state[a] = 0;
    state[b] = 0;
    s.states.push_back(state);
    const int horizon = 1 + static_cast<int>(rng.below(5));
    for (int t = 0; t < horizon; ++t) {
        std::vector<uint8_t> next = s.states.back();
        for (int l = 0; l < n_links; ++l)
            if (next[l] && rng.unit() < 0.3) next[l] = 0;
        std::vector<uint8_t> served(n_buses, 1);
        std::vector<double> shed(n_buses, 0.0);
        for (int i = 0; i < n_buses; ++i)
            if (rng.unit() < 0.35) {
                served[i] = 0;
                shed[i] = 5.0 + 20.0 * rng.unit();
            }
        s.load_served.push_back(std::move(served));
        s.shed_mw.push_back(std::move(shed));
        s.states.push_back(std::move(next));
    }
    s.termination_time = static_cast<int>(s.states.size());
    return s;
}

inline SamplePool random_pool(Rng& rng, int n_links = 0, int n_buses = 0, int n_samples = 0) {
    SamplePool pool;
    const int links = n_links > 0 ? n_links : 3 + static_cast<int>(rng.below(4));
    const int buses = n_buses > 0 ? n_buses : 2 + static_cast<int>(rng.below(3));
    const int count = n_samples > 0 ? n_samples : 3 + static_cast<int>(rng.below(6));
    for (int k = 0; k < count; ++k) pool.samples.push_back(random_sample(rng, links, buses, k));
    pool.train_ids.clear();
    for (const auto& s : pool.samples) pool.train_ids.push_back(s.sample_id);
    return pool;
}

// --- independent oracles --------------------------------------------------

// Naive O(K T N^2) recount of the transition estimators, straight from the
// counting definitions.
inline std::pair<Matrix, Matrix> brute_force_A(const SamplePool& pool) {
    const int m = pool.n_branches();
    Matrix a11(m, m), a01(m, m);
    std::vector<std::vector<int64_t>> c11(m, std::vector<int64_t>(m, 0)), c1 = c11, c01 = c11,
                                      c0 = c11;
    for (const CascadeSample* s : pool.training_samples()) {
        const int t_end = s->termination_time;
        for (int i = 0; i < m; ++i) {
            int tau = t_end;
            for (int t = 0; t < t_end; ++t)
                if (!s->states[t][i]) {
                    tau = t + 1;
                    break;
                }
            for (int t = 1; t + 1 <= tau; ++t) {  // pairs (t, t+1), 1-based
                const bool i_next_alive = s->states[t][i] != 0;  // s[t+1] is states[t]
                for (int j = 0; j < m; ++j) {
                    if (s->states[t - 1][j]) {
                        ++c1[j][i];
                        if (i_next_alive) ++c11[j][i];
                    } else {
                        ++c0[j][i];
                        if (i_next_alive) ++c01[j][i];
                    }
                }
            }
        }
    }
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
            a11(j, i) = c1[j][i] > 0 ? static_cast<double>(c11[j][i]) / c1[j][i] : 1.0;
            a01(j, i) = c0[j][i] > 0 ? static_cast<double>(c01[j][i]) / c0[j][i] : 0.5;
        }
    return {a11, a01};
}

inline std::pair<Matrix, Matrix> brute_force_B(const SamplePool& pool) {
    const int m = pool.n_branches();
    const int n = pool.n_buses();
    Matrix b11(m, n), b01(m, n);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i) {
            int64_t f11 = 0, f1 = 0, f01 = 0, f0 = 0;
            for (const CascadeSample* s : pool.training_samples())
                for (std::size_t t = 0; t < s->load_served.size(); ++t) {
                    if (s->states[t][j]) {
                        ++f1;
                        if (s->load_served[t][i]) ++f11;
                    } else {
                        ++f0;
                        if (s->load_served[t][i]) ++f01;
                    }
                }
            b11(j, i) = f1 > 0 ? static_cast<double>(f11) / f1 : 1.0;
            b01(j, i) = f0 > 0 ? static_cast<double>(f01) / f0 : 0.5;
        }
    return {b11, b01};
}

// Direct evaluation of the fit objective for link subproblem `link`,
// independent of the SimplexQuadratic accumulation.
inline double direct_link_objective(const SamplePool& pool, const Matrix& a11, const Matrix& a01,
                                    int link, const std::vector<double>& w) {
    double total = 0.0;
    std::size_t k = 0;
    for (const CascadeSample* s : pool.training_samples()) {
        ++k;
        for (std::size_t t = 0; t + 1 < s->states.size(); ++t) {
            double pred = 0.0;
            for (std::size_t j = 0; j < w.size(); ++j)
                pred += w[j] * (s->states[t][j] ? a11(j, link) : a01(j, link));
            const double r = (s->states[t + 1][link] ? 1.0 : 0.0) - pred;
            total += r * r;
        }
    }
    return k > 0 ? total / static_cast<double>(k) : 0.0;
}

inline double direct_shed_objective(const SamplePool& pool, const Matrix& b11, const Matrix& b01,
                                    int bus, const std::vector<double>& w) {
    double total = 0.0;
    std::size_t k = 0;
    for (const CascadeSample* s : pool.training_samples()) {
        ++k;
        for (std::size_t t = 0; t < s->load_served.size(); ++t) {
            double pred = 0.0;
            for (std::size_t j = 0; j < w.size(); ++j)
                pred += w[j] * (s->states[t][j] ? b11(j, bus) : b01(j, bus));
            const double r = (s->load_served[t][bus] ? 1.0 : 0.0) - pred;
            total += r * r;
        }
    }
    return k > 0 ? total / static_cast<double>(k) : 0.0;
}

// Line-graph distances by explicit construction: pairwise shared-endpoint
// test, then BFS per source.
inline std::vector<double> bfs_line_graph_oracle(const Network& net) {
    const int m = net.n_branches();
    std::vector<std::vector<int>> adj(m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            if (a == b) continue;
            const auto& ba = net.branches[a];
            const auto& bb = net.branches[b];
            const bool shared = ba.from_bus == bb.from_bus || ba.from_bus == bb.to_bus ||
                                ba.to_bus == bb.from_bus || ba.to_bus == bb.to_bus;
            if (shared) adj[a].push_back(b);
        }
    std::vector<double> dist(static_cast<std::size_t>(m) * m, static_cast<double>(m));
    for (int src = 0; src < m; ++src) {
        std::vector<int> level(m, -1);
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

// Exhaustive basic-solution enumeration for small LPs; independent check
// of the simplex kernel. Returns false when no feasible vertex exists.
inline bool vertex_enum_lp(const LpProblem& p, double& best_obj, std::vector<double>& best_x) {
    const int n = static_cast<int>(p.objective.size());
    // Constraint list: problem rows plus x_i >= 0 (as -x_i <= 0).
    struct Con {
        std::vector<double> a;
        double b;
        bool eq;
    };
    std::vector<Con> cons;
    for (const auto& row : p.rows)
        cons.push_back({row.coeffs, row.rhs, row.type == LpRowType::equal});
    for (int i = 0; i < n; ++i) {
        std::vector<double> a(n, 0.0);
        a[i] = -1.0;
        cons.push_back({a, 0.0, false});
    }
    const int total = static_cast<int>(cons.size());
    std::vector<int> idx(total);
    for (int i = 0; i < total; ++i) idx[i] = i;

    bool found = false;
    best_obj = std::numeric_limits<double>::infinity();
    std::vector<int> pick;
    // Enumerate all n-subsets of constraints as candidate active sets.
    std::vector<int> comb(n);
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == n) {
            Matrix a(n, n);
            std::vector<double> b(n);
            for (int r = 0; r < n; ++r) {
                for (int c = 0; c < n; ++c) a(r, c) = cons[comb[r]].a[c];
                b[r] = cons[comb[r]].b;
            }
            std::vector<double> x;
            try {
                x = solve_linear(std::move(a), std::move(b));
            } catch (...) {
                return;
            }
            for (const auto& con : cons) {
                double lhs = 0.0;
                for (int c = 0; c < n; ++c) lhs += con.a[c] * x[c];
                if (con.eq ? std::fabs(lhs - con.b) > 1e-6 : lhs > con.b + 1e-6) return;
            }
            double obj = 0.0;
            for (int c = 0; c < n; ++c) obj += p.objective[c] * x[c];
            if (obj < best_obj) {
                best_obj = obj;
                best_x = x;
            }
            found = true;
            return;
        }
        for (int i = start; i < total; ++i) {
            comb[depth] = i;
            rec(i + 1, depth + 1);
        }
    };
    // Equalities must always be active; require them in every subset by
    // enumerating subsets that include all equality indices.
    std::vector<int> eq_idx, ineq_idx;
    for (int i = 0; i < total; ++i) (cons[i].eq ? eq_idx : ineq_idx).push_back(i);
    const int need = n - static_cast<int>(eq_idx.size());
    if (need < 0) return false;
    std::vector<int> ineq_comb(need);
    std::function<void(int, int)> rec2 = [&](int start, int depth) {
        if (depth == need) {
            for (std::size_t r = 0; r < eq_idx.size(); ++r) comb[r] = eq_idx[r];
            for (int r = 0; r < need; ++r) comb[eq_idx.size() + r] = ineq_comb[r];
            rec(0, n);  // depth==n triggers evaluation immediately
            return;
        }
        for (int i = start; i < static_cast<int>(ineq_idx.size()); ++i) {
            ineq_comb[depth] = ineq_idx[i];
            rec2(i + 1, depth + 1);
        }
    };
    // Kick evaluation through rec with depth==n by pre-filling comb.
    rec2(0, 0);
    return found;
}

}  // namespace testutil
