#include "gridcast/opf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gridcast/lp.hpp"

namespace gridcast {

namespace {

constexpr double kTinyMw = 1e-9;

struct IslandContext {
    const Network* net = nullptr;
    const std::vector<int>* buses = nullptr;
    const std::vector<int>* branches = nullptr;
    const std::vector<int>* gens = nullptr;
    Matrix isf;                   // filled lazily when flow rows are needed
    std::vector<int> bus_col;     // bus id -> ISF column
    int slack = 0;

    double total(const std::vector<double>& per_bus) const {
        double t = 0.0;
        for (int b : *buses) t += per_bus[b];
        return t;
    }
    double gen_min_total() const {
        double t = 0.0;
        for (int g : *gens) t += net->generators[g].p_min;
        return t;
    }
    double gen_max_total() const {
        double t = 0.0;
        for (int g : *gens) t += net->generators[g].p_max;
        return t;
    }
};

IslandContext make_context(const Network& net, const IslandPartition& part, int k) {
    IslandContext ctx;
    ctx.net = &net;
    ctx.buses = &part.island_buses[k];
    ctx.branches = &part.island_branches[k];
    ctx.gens = &part.island_gens[k];
    ctx.slack = island_slack(net, *ctx.buses, *ctx.gens);
    ctx.bus_col.assign(net.n_buses(), -1);
    for (std::size_t i = 0; i < ctx.buses->size(); ++i) ctx.bus_col[(*ctx.buses)[i]] = static_cast<int>(i);
    ctx.isf = injection_shift_matrix(net, *ctx.buses, *ctx.branches, ctx.slack);
    return ctx;
}

// Appends |flow| <= short-term rating rows. Variables are the island gens
// (shifted by p_min) followed, optionally, by per-bus shed variables whose
// bus ids are given in shed_buses.
void add_flow_rows(LpProblem& lp, const IslandContext& ctx, const std::vector<double>& demand,
                   double sigma, const std::vector<int>& shed_buses) {
    const auto& gens = *ctx.gens;
    const std::size_t n_vars = gens.size() + shed_buses.size();
    for (std::size_t r = 0; r < ctx.branches->size(); ++r) {
        const Branch& br = ctx.net->branches[(*ctx.branches)[r]];
        const double limit = br.rating_short();
        std::vector<double> coeffs(n_vars, 0.0);
        double base = 0.0;
        for (std::size_t g = 0; g < gens.size(); ++g) {
            const auto& gen = ctx.net->generators[gens[g]];
            const double a = ctx.isf(r, ctx.bus_col[gen.bus]);
            coeffs[g] = a;
            base += a * gen.p_min;
        }
        for (int bus : *ctx.buses) base -= ctx.isf(r, ctx.bus_col[bus]) * sigma * demand[bus];
        for (std::size_t s = 0; s < shed_buses.size(); ++s)
            coeffs[gens.size() + s] = ctx.isf(r, ctx.bus_col[shed_buses[s]]);

        std::vector<double> neg(coeffs);
        for (auto& v : neg) v = -v;
        lp.add_row(std::move(coeffs), limit - base, LpRowType::less_equal);
        lp.add_row(std::move(neg), limit + base, LpRowType::less_equal);
    }
}

void add_gen_cap_rows(LpProblem& lp, const IslandContext& ctx, std::size_t n_vars) {
    const auto& gens = *ctx.gens;
    for (std::size_t g = 0; g < gens.size(); ++g) {
        const auto& gen = ctx.net->generators[gens[g]];
        std::vector<double> coeffs(n_vars, 0.0);
        coeffs[g] = 1.0;
        lp.add_row(std::move(coeffs), gen.p_max - gen.p_min, LpRowType::less_equal);
    }
}

// Full-service LP at a given sigma; objective optional (feasibility-only
// when null).
LpProblem full_service_lp(const IslandContext& ctx, const std::vector<double>& demand,
                          double sigma) {
    const auto& gens = *ctx.gens;
    LpProblem lp;
    lp.objective.assign(gens.size(), 0.0);
    for (std::size_t g = 0; g < gens.size(); ++g)
        lp.objective[g] = ctx.net->generators[gens[g]].cost;

    std::vector<double> balance(gens.size(), 1.0);
    lp.add_row(std::move(balance), sigma * ctx.total(demand) - ctx.gen_min_total(),
               LpRowType::equal);
    add_gen_cap_rows(lp, ctx, gens.size());
    add_flow_rows(lp, ctx, demand, sigma, {});
    return lp;
}

void blackout_island(const IslandContext& ctx, std::vector<double>& dispatch,
                     std::vector<double>& served) {
    for (int g : *ctx.gens) dispatch[g] = 0.0;
    for (int bus : *ctx.buses) served[bus] = 0.0;
}

void solve_full_service_island(const IslandContext& ctx, const std::vector<double>& demand,
                               const SolverConfig& cfg, std::vector<double>& dispatch,
                               std::vector<double>& served) {
    const double d_total = ctx.total(demand);
    if (ctx.gens->empty()) {
        blackout_island(ctx, dispatch, served);
        return;
    }
    if (d_total <= kTinyMw) {
        for (int g : *ctx.gens) dispatch[g] = 0.0;
        for (int bus : *ctx.buses) served[bus] = demand[bus];
        return;
    }

    auto apply = [&](const LpResult& res, double sigma) {
        for (std::size_t g = 0; g < ctx.gens->size(); ++g)
            dispatch[(*ctx.gens)[g]] = res.x[g] + ctx.net->generators[(*ctx.gens)[g]].p_min;
        for (int bus : *ctx.buses) served[bus] = sigma * demand[bus];
    };

    LpResult full = solve_lp(full_service_lp(ctx, demand, 1.0), cfg.feasibility_tol);
    if (full.status == LpStatus::optimal) {
        apply(full, 1.0);
        return;
    }

    // Uniform service scaling: bisect the largest feasible sigma.
    double lo = 0.0, hi = 1.0;
    if (!lp_feasible(full_service_lp(ctx, demand, lo), cfg.feasibility_tol)) {
        blackout_island(ctx, dispatch, served);  // p_min floor exceeds any servable demand
        return;
    }
    while (hi - lo > cfg.sigma_tol) {
        const double mid = 0.5 * (lo + hi);
        if (lp_feasible(full_service_lp(ctx, demand, mid), cfg.feasibility_tol))
            lo = mid;
        else
            hi = mid;
    }
    LpResult scaled = solve_lp(full_service_lp(ctx, demand, lo), cfg.feasibility_tol);
    if (scaled.status != LpStatus::optimal) {
        blackout_island(ctx, dispatch, served);
        return;
    }
    apply(scaled, lo);
}

}  // namespace

FlowSolution dc_opf_full_service(const Network& net, const std::vector<uint8_t>& alive,
                                 const std::vector<double>& demand, const SolverConfig& cfg) {
    const IslandPartition part = partition_islands(net, alive);
    std::vector<double> dispatch(net.n_generators(), 0.0);
    std::vector<double> served(net.n_buses(), 0.0);
    for (int k = 0; k < part.n_islands(); ++k) {
        const IslandContext ctx = make_context(net, part, k);
        solve_full_service_island(ctx, demand, cfg, dispatch, served);
    }
    FlowSolution sol = dc_pf(net, alive, served, dispatch, cfg);
    double d_total = 0.0, s_total = 0.0;
    for (int i = 0; i < net.n_buses(); ++i) {
        d_total += demand[i];
        s_total += served[i];
    }
    sol.sigma = d_total > kTinyMw ? s_total / d_total : 1.0;
    sol.fallback_engaged = sol.sigma < 1.0 - 1e-9;
    sol.feasible = true;
    return sol;
}

FlowSolution dc_opf_smart_shed(const Network& net, const std::vector<uint8_t>& alive,
                               const std::vector<double>& demand,
                               const std::vector<double>& shed_priority, const SolverConfig& cfg) {
    if (shed_priority.size() != demand.size())
        throw std::invalid_argument("dc_opf_smart_shed: priority vector size mismatch");
    const IslandPartition part = partition_islands(net, alive);
    std::vector<double> dispatch(net.n_generators(), 0.0);
    std::vector<double> served(net.n_buses(), 0.0);

    // Tie-break weight keeping shedding decisions dominant over dispatch
    // cost everywhere.
    double max_priority = 0.0, max_cost = 0.0;
    for (double p : shed_priority) max_priority = std::max(max_priority, p);
    for (const auto& g : net.generators) max_cost = std::max(max_cost, g.cost);
    const double eps_gen = max_cost > 0 ? 1e-6 * max_priority / max_cost : 0.0;

    for (int k = 0; k < part.n_islands(); ++k) {
        const IslandContext ctx = make_context(net, part, k);
        const auto& gens = *ctx.gens;
        if (gens.empty()) {
            blackout_island(ctx, dispatch, served);
            continue;
        }
        std::vector<int> shed_buses;
        for (int bus : *ctx.buses)
            if (demand[bus] > kTinyMw) shed_buses.push_back(bus);

        const std::size_t n_vars = gens.size() + shed_buses.size();
        LpProblem lp;
        lp.objective.assign(n_vars, 0.0);
        for (std::size_t g = 0; g < gens.size(); ++g)
            lp.objective[g] = eps_gen * net.generators[gens[g]].cost;
        for (std::size_t s = 0; s < shed_buses.size(); ++s)
            lp.objective[gens.size() + s] = shed_priority[shed_buses[s]];

        std::vector<double> balance(n_vars, 1.0);  // sum dispatch + sum shed = demand total
        lp.add_row(std::move(balance), ctx.total(demand) - ctx.gen_min_total(), LpRowType::equal);
        add_gen_cap_rows(lp, ctx, n_vars);
        for (std::size_t s = 0; s < shed_buses.size(); ++s) {
            std::vector<double> coeffs(n_vars, 0.0);
            coeffs[gens.size() + s] = 1.0;
            lp.add_row(std::move(coeffs), demand[shed_buses[s]], LpRowType::less_equal);
        }
        add_flow_rows(lp, ctx, demand, 1.0, shed_buses);

        const LpResult res = solve_lp(lp, cfg.feasibility_tol);
        if (res.status != LpStatus::optimal) {
            blackout_island(ctx, dispatch, served);  // p_min floor exceeds island demand
            continue;
        }
        for (std::size_t g = 0; g < gens.size(); ++g)
            dispatch[gens[g]] = res.x[g] + net.generators[gens[g]].p_min;
        for (int bus : *ctx.buses) served[bus] = demand[bus];
        for (std::size_t s = 0; s < shed_buses.size(); ++s) {
            double shed = std::clamp(res.x[gens.size() + s], 0.0, demand[shed_buses[s]]);
            if (shed < 1e-9) shed = 0.0;
            served[shed_buses[s]] = demand[shed_buses[s]] - shed;
        }
    }

    FlowSolution sol = dc_pf(net, alive, served, dispatch, cfg);
    double d_total = 0.0, s_total = 0.0;
    for (int i = 0; i < net.n_buses(); ++i) {
        d_total += demand[i];
        s_total += served[i];
    }
    sol.sigma = d_total > kTinyMw ? s_total / d_total : 1.0;
    sol.feasible = true;
    return sol;
}

}  // namespace gridcast
