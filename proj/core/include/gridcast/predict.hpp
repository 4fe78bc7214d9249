#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridcast/influence.hpp"
#include "gridcast/train.hpp"

namespace gridcast {

// Prediction never touches power flow: every step is one matrix-vector
// product plus a threshold comparison. This header intentionally has no
// dependency on the simulation library.

struct PredictedCascade {
    // states[0] is the given initial state; states[k] for k >= 1 is the
    // bisection of probs[k-1].
    std::vector<std::vector<uint8_t>> states;
    std::vector<std::vector<double>> probs;
    int termination_time = 1;
    std::vector<double> thresholds;  // epsilon used, per link
    bool loading_fallback = false;
};

struct PredictedLoadShed {
    // One served/probs entry per input state.
    std::vector<std::vector<uint8_t>> served;
    std::vector<std::vector<double>> probs;
    std::vector<double> thresholds;  // delta used, per bus
    bool loading_fallback = false;
};

enum class PredictionMode { advisory, eval };
std::string mode_name(PredictionMode m);
PredictionMode mode_from_name(const std::string& s);

// Iterates the hard-excitation dynamics from the initial binary state:
// dead links stay dead, the loop stops at a fixed point or once every
// link is dead, and never runs more than N_br steps.
PredictedCascade predict_cascade(const InfluenceModelD& model,
                                 const std::vector<uint8_t>& initial_state, double loading_c);

// Service prediction along a given link-state sequence (true states in
// eval mode, predicted states in advisory mode; the caller picks).
PredictedLoadShed predict_load_shed(const InfluenceModelE& model,
                                    const std::vector<std::vector<uint8_t>>& states,
                                    double loading_c);

}  // namespace gridcast
