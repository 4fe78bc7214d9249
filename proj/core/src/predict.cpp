#include "gridcast/predict.hpp"

#include <stdexcept>

// Prediction is flow-free by construction: one influence product and one
// threshold comparison per step. Pulling any power-flow machinery into
// this translation unit is a build error.
#ifdef GRIDCAST_FLOW_HEADERS_INCLUDED
#error "influence prediction must not depend on the power-flow solver"
#endif

namespace gridcast {

std::string mode_name(PredictionMode m) {
    return m == PredictionMode::advisory ? "advisory" : "eval";
}

PredictionMode mode_from_name(const std::string& s) {
    if (s == "advisory") return PredictionMode::advisory;
    if (s == "eval") return PredictionMode::eval;
    throw std::invalid_argument("unknown prediction mode: " + s);
}

PredictedCascade predict_cascade(const InfluenceModelD& model,
                                 const std::vector<uint8_t>& initial_state, double loading_c) {
    const int m = model.n_links();
    if (static_cast<int>(initial_state.size()) != m)
        throw std::invalid_argument("predict_cascade: state size mismatch");

    PredictedCascade out;
    const ThresholdSelection sel =
        select_threshold(model.threshold_pool, model.threshold_index, loading_c, initial_state);
    out.thresholds = sel.thresholds;
    out.loading_fallback = sel.loading_fallback;
    out.states.reserve(8);
    out.probs.reserve(8);
    out.states.push_back(initial_state);

    StepChain chain = link_chain(model, initial_state);
    for (int step = 0; step < m; ++step) {
        const auto& current = out.states.back();
        const auto& probs = chain.probs();
        std::vector<uint8_t> next(m);
        int newly_dead = 0;
        int alive = 0;
        for (int i = 0; i < m; ++i) {
            const bool healthy = probs[i] >= out.thresholds[i];
            next[i] = (current[i] && healthy) ? 1 : 0;  // no revival
            if (current[i] && !next[i]) ++newly_dead;
            if (next[i]) ++alive;
        }
        out.probs.push_back(probs);
        const bool fixed_point = newly_dead == 0;
        if (!fixed_point)
            for (int i = 0; i < m; ++i)
                if (current[i] && !next[i]) chain.kill(i);
        out.states.push_back(std::move(next));
        if (fixed_point || alive == 0) break;
    }
    out.termination_time = static_cast<int>(out.states.size());
    return out;
}

PredictedLoadShed predict_load_shed(const InfluenceModelE& model,
                                    const std::vector<std::vector<uint8_t>>& states,
                                    double loading_c) {
    if (states.empty()) throw std::invalid_argument("predict_load_shed: empty state sequence");
    const int n = model.n_buses();

    PredictedLoadShed out;
    const ThresholdSelection sel =
        select_threshold(model.threshold_pool, model.threshold_index, loading_c, states[0]);
    out.thresholds = sel.thresholds;
    out.loading_fallback = sel.loading_fallback;
    out.served.reserve(states.size());
    out.probs.reserve(states.size());

    StepChain chain = shed_chain(model, states[0]);
    for (std::size_t t = 0; t < states.size(); ++t) {
        if (t > 0) chain.advance(states[t]);
        const auto& probs = chain.probs();
        std::vector<uint8_t> served(n);
        for (int i = 0; i < n; ++i) served[i] = probs[i] >= out.thresholds[i] ? 1 : 0;
        out.probs.push_back(probs);
        out.served.push_back(std::move(served));
    }
    return out;
}

}  // namespace gridcast
