#include "gridcast/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gridcast/parallel.hpp"
#include "gridcast/rng.hpp"

namespace gridcast {

namespace {

constexpr double kTinyMw = 1e-9;
constexpr double kOverloadTol = 1e-6;  // MW above the short-term limit

}  // namespace

void balance_proportional(const Network& net, const IslandPartition& part,
                          const std::vector<double>& demand, std::vector<double>& dispatch,
                          std::vector<double>& served) {
    dispatch.assign(net.n_generators(), 0.0);
    served.assign(net.n_buses(), 0.0);
    for (int k = 0; k < part.n_islands(); ++k) {
        const auto& buses = part.island_buses[k];
        const auto& gens = part.island_gens[k];
        double d_total = 0.0;
        for (int bus : buses) d_total += demand[bus];
        double p_min = 0.0, p_max = 0.0;
        for (int g : gens) {
            p_min += net.generators[g].p_min;
            p_max += net.generators[g].p_max;
        }

        if (d_total <= kTinyMw) {
            for (int bus : buses) served[bus] = demand[bus];
            continue;  // generators stay off; nothing to serve
        }
        if (p_max < d_total) {
            if (p_max <= kTinyMw) continue;  // blackout: no generation at all
            const double scale = p_max / d_total;
            for (int bus : buses) served[bus] = scale * demand[bus];
            for (int g : gens) dispatch[g] = net.generators[g].p_max;
            continue;
        }
        if (p_min > d_total) continue;  // cannot curtail below minimum; island folds
        const double headroom = p_max - p_min;
        const double phi = headroom > kTinyMw ? (d_total - p_min) / headroom : 0.0;
        for (int g : gens) {
            const auto& gen = net.generators[g];
            dispatch[g] = gen.p_min + phi * (gen.p_max - gen.p_min);
        }
        for (int bus : buses) served[bus] = demand[bus];
    }
}

CascadeSample run_cascade(const Network& net, const LoadingProfile& profile,
                          std::pair<int, int> initial_failures, Policy policy, uint64_t rng_seed,
                          const SolverConfig& cfg, CascadeDiagnostics* diag) {
    const int m = net.n_branches();
    auto [b1, b2] = initial_failures;
    if (b1 == b2 || b1 < 0 || b2 < 0 || b1 >= m || b2 >= m)
        throw std::invalid_argument("run_cascade: initial failures must be two distinct branches");

    const Network scaled = scale_loads(net, profile);
    const std::vector<double> demand = scaled.demand();
    const std::vector<double> priorities = scaled.shed_priorities();

    CascadeSample sample;
    sample.loading_c = profile.c;
    sample.policy = policy;
    sample.initial_failures = {std::min(b1, b2), std::max(b1, b2)};
    (void)rng_seed;  // the oracle is deterministic; the seed is pool provenance

    std::vector<uint8_t> alive(m, 1);
    alive[b1] = 0;
    alive[b2] = 0;
    sample.states.push_back(alive);

    std::vector<double> dispatch, served;
    for (;;) {
        const auto& current = sample.states.back();
        FlowSolution flow;
        switch (policy) {
            case Policy::none: {
                const IslandPartition part = partition_islands(scaled, current);
                balance_proportional(scaled, part, demand, dispatch, served);
                flow = dc_pf(scaled, current, served, dispatch, cfg);
                break;
            }
            case Policy::redispatch_full:
                flow = dc_opf_full_service(scaled, current, demand, cfg);
                break;
            case Policy::redispatch_smart:
                flow = dc_opf_smart_shed(scaled, current, demand, priorities, cfg);
                break;
        }

        std::vector<int> overloaded;
        for (int b = 0; b < m; ++b)
            if (current[b] &&
                std::fabs(flow.branch_flow[b]) > scaled.branches[b].rating_short() + kOverloadTol)
                overloaded.push_back(b);
        if (diag) diag->steps.push_back({flow, overloaded});

        std::vector<uint8_t> served_flags(net.n_buses(), 1);
        std::vector<double> shed(net.n_buses(), 0.0);
        bool any_shed = false;
        for (int i = 0; i < net.n_buses(); ++i) {
            const double s = demand[i] - flow.served_load[i];
            if (s > kTinyMw) {
                shed[i] = s;
                served_flags[i] = 0;
                any_shed = true;
            }
        }

        if (!overloaded.empty()) {
            sample.load_served.push_back(std::move(served_flags));
            sample.shed_mw.push_back(std::move(shed));
            std::vector<uint8_t> next = current;
            for (int b : overloaded) next[b] = 0;
            sample.states.push_back(std::move(next));
            continue;
        }
        // Steady state: record the final interval only when service was
        // actually reduced, repeating the stable state once.
        if (any_shed) {
            sample.load_served.push_back(std::move(served_flags));
            sample.shed_mw.push_back(std::move(shed));
            sample.states.push_back(current);
        }
        break;
    }
    sample.termination_time = static_cast<int>(sample.states.size());
    return sample;
}

SamplePool generate_pool(const Network& net, const LoadingProfile& profile, Policy policy,
                         uint64_t master_seed, const PoolConfig& cfg) {
    if (cfg.n_samples < 2) throw std::invalid_argument("generate_pool: need at least 2 samples");
    const int m = net.n_branches();
    if (m < 2) throw std::invalid_argument("generate_pool: need at least 2 branches");
    const uint64_t n_pairs = static_cast<uint64_t>(m) * (m - 1) / 2;

    SamplePool pool;
    pool.samples.resize(cfg.n_samples);
    parallel_for(static_cast<std::size_t>(cfg.n_samples), [&](std::size_t i) {
        const uint64_t seed = sample_seed(master_seed, i);
        Rng rng(seed);
        const auto pair = unrank_pair(rng.below(n_pairs), m);
        CascadeSample s = run_cascade(net, profile, pair, policy, seed, cfg.solver);
        s.sample_id = static_cast<int64_t>(i);
        pool.samples[i] = std::move(s);
    }, cfg.threads);
    pool.split(cfg.split_fraction);
    return pool;
}

}  // namespace gridcast
