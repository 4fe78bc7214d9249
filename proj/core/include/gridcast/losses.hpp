#pragma once

#include <vector>

#include "gridcast/influence.hpp"
#include "gridcast/predict.hpp"
#include "gridcast/sample.hpp"

namespace gridcast {

// Discount rate shared by the grid- and consumer-centric losses.
constexpr double kLossDiscountRate = 0.2;

struct LossOptions {
    double discount_rate = kLossDiscountRate;
    bool charge_initial_failures = true;
};

// Grid-centric loss: sum over failed branches of C(b) * exp(-rate * t_b),
// t_b the failure step (initial failures fail at t=1). Healthy branches
// are not charged, so a cascade-free sample under corrective action costs
// only its exogenous failures.
double link_fail_loss(const CascadeSample& sample, const std::vector<double>& cost_weights,
                      const LossOptions& opts = {});

// Same formula on a predicted cascade.
double link_fail_loss(const PredictedCascade& prediction, const std::vector<double>& cost_weights,
                      const LossOptions& opts = {});

// Consumer-centric loss: sum over buses and steps of C(l) * LS_l(t) * exp(-rate*t).
double load_shed_loss(const CascadeSample& sample, const std::vector<double>& shed_priorities,
                      const LossOptions& opts = {});

// Predicted variant: a bus predicted shed at step t is charged its full
// scaled demand, since the flow-free model yields binary sheds only.
double load_shed_loss(const PredictedLoadShed& prediction, const std::vector<double>& scaled_demand,
                      const std::vector<double>& shed_priorities, const LossOptions& opts = {});

// Influence-localization loss: sum_ij D(i,j) * K(i,j); K flat row-major.
double local_influence_loss(const Matrix& d, const std::vector<double>& k_distance);

struct CriticalityReport {
    std::vector<double> cd;       // per link, Eq.-style tally over the D model
    std::vector<double> ce;       // per link, over the E model
    std::vector<int> ranking_cd;  // link ids, most critical first
    std::vector<int> ranking_ce;
};

CriticalityReport criticality(const InfluenceModelD& dm, const InfluenceModelE& em);

// Fraction of links whose final predicted state matches the oracle.
double link_accuracy(const std::vector<uint8_t>& predicted_final,
                     const std::vector<uint8_t>& actual_final);
double link_accuracy(const PredictedCascade& prediction, const CascadeSample& sample);

// 1 - ||overall - predicted overall||_1 / N, where overall marks buses
// that ever shed during the sequence.
double shed_accuracy(const std::vector<uint8_t>& predicted_overall,
                     const std::vector<uint8_t>& actual_overall);
double shed_accuracy(const PredictedLoadShed& prediction, const CascadeSample& sample);

std::vector<uint8_t> overall_shed_vector(const CascadeSample& sample);
std::vector<uint8_t> overall_shed_vector(const PredictedLoadShed& prediction);

struct LossReport {
    double link_fail_mean = 0.0;
    double load_shed_mean = 0.0;
    double local_influence = 0.0;
    std::vector<double> link_fail_per_sample;
    std::vector<double> load_shed_per_sample;
};

LossReport pool_losses(const SamplePool& pool, const std::vector<double>& cost_weights,
                       const std::vector<double>& shed_priorities, const LossOptions& opts = {});

}  // namespace gridcast
