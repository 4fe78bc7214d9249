#include "gridcast/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gridcast {

namespace {

double fail_loss_from_steps(const std::vector<int>& fail_step,
                            const std::vector<double>& cost_weights, const LossOptions& opts,
                            const std::vector<uint8_t>* initial_state) {
    double loss = 0.0;
    for (std::size_t b = 0; b < fail_step.size(); ++b) {
        const int t = fail_step[b];
        if (t == 0) continue;  // never failed
        if (!opts.charge_initial_failures && initial_state && !(*initial_state)[b]) continue;
        loss += cost_weights[b] * std::exp(-opts.discount_rate * t);
    }
    return loss;
}

}  // namespace

double link_fail_loss(const CascadeSample& sample, const std::vector<double>& cost_weights,
                      const LossOptions& opts) {
    if (cost_weights.size() != sample.states[0].size())
        throw std::invalid_argument("link_fail_loss: cost vector size mismatch");
    std::vector<int> steps(sample.states[0].size());
    for (std::size_t b = 0; b < steps.size(); ++b)
        steps[b] = sample.failure_step(static_cast<int>(b));
    return fail_loss_from_steps(steps, cost_weights, opts, &sample.states[0]);
}

double link_fail_loss(const PredictedCascade& prediction, const std::vector<double>& cost_weights,
                      const LossOptions& opts) {
    if (prediction.states.empty() || cost_weights.size() != prediction.states[0].size())
        throw std::invalid_argument("link_fail_loss: cost vector size mismatch");
    std::vector<int> steps(prediction.states[0].size(), 0);
    for (std::size_t b = 0; b < steps.size(); ++b)
        for (std::size_t t = 0; t < prediction.states.size(); ++t)
            if (!prediction.states[t][b]) {
                steps[b] = static_cast<int>(t) + 1;
                break;
            }
    return fail_loss_from_steps(steps, cost_weights, opts, &prediction.states[0]);
}

double load_shed_loss(const CascadeSample& sample, const std::vector<double>& shed_priorities,
                      const LossOptions& opts) {
    double loss = 0.0;
    for (std::size_t t = 0; t < sample.shed_mw.size(); ++t) {
        const double discount = std::exp(-opts.discount_rate * static_cast<double>(t + 1));
        const auto& shed = sample.shed_mw[t];
        if (shed.size() != shed_priorities.size())
            throw std::invalid_argument("load_shed_loss: priority vector size mismatch");
        for (std::size_t i = 0; i < shed.size(); ++i)
            loss += shed_priorities[i] * shed[i] * discount;
    }
    return loss;
}

double load_shed_loss(const PredictedLoadShed& prediction, const std::vector<double>& scaled_demand,
                      const std::vector<double>& shed_priorities, const LossOptions& opts) {
    double loss = 0.0;
    for (std::size_t t = 0; t < prediction.served.size(); ++t) {
        const double discount = std::exp(-opts.discount_rate * static_cast<double>(t + 1));
        const auto& served = prediction.served[t];
        for (std::size_t i = 0; i < served.size(); ++i)
            if (!served[i]) loss += shed_priorities[i] * scaled_demand[i] * discount;
    }
    return loss;
}

double local_influence_loss(const Matrix& d, const std::vector<double>& k_distance) {
    if (k_distance.size() != d.rows() * d.cols() || d.rows() != d.cols())
        throw std::invalid_argument("local_influence_loss: dimension mismatch");
    double loss = 0.0;
    for (std::size_t r = 0; r < d.rows(); ++r)
        for (std::size_t c = 0; c < d.cols(); ++c)
            loss += d(r, c) * k_distance[r * d.cols() + c];
    return loss;
}

namespace {
std::vector<int> ranked_desc(const std::vector<double>& v) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] > v[b]; });
    return idx;
}
}  // namespace

CriticalityReport criticality(const InfluenceModelD& dm, const InfluenceModelE& em) {
    const int m = dm.n_links();
    CriticalityReport rep;
    rep.cd.assign(m, 0.0);
    rep.ce.assign(m, 0.0);
    // C^D(j): how much link j's death would depress the rest of the grid,
    // weighted by how strongly each link listens to j.
    for (int j = 0; j < m; ++j) {
        double acc = 0.0;
        for (int i = 0; i < m; ++i) acc += dm.d(i, j) * (dm.a11(j, i) - dm.a01(j, i));
        rep.cd[j] = acc;
    }
    const int n = em.n_buses();
    for (int j = 0; j < em.n_links(); ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += em.e(i, j) * (em.b11(j, i) - em.b01(j, i));
        rep.ce[j] = acc;
    }
    rep.ranking_cd = ranked_desc(rep.cd);
    rep.ranking_ce = ranked_desc(rep.ce);
    return rep;
}

double link_accuracy(const std::vector<uint8_t>& predicted_final,
                     const std::vector<uint8_t>& actual_final) {
    if (predicted_final.size() != actual_final.size() || predicted_final.empty())
        throw std::invalid_argument("link_accuracy: size mismatch");
    std::size_t same = 0;
    for (std::size_t i = 0; i < predicted_final.size(); ++i)
        if ((predicted_final[i] != 0) == (actual_final[i] != 0)) ++same;
    return static_cast<double>(same) / static_cast<double>(predicted_final.size());
}

double link_accuracy(const PredictedCascade& prediction, const CascadeSample& sample) {
    return link_accuracy(prediction.states.back(), sample.states.back());
}

double shed_accuracy(const std::vector<uint8_t>& predicted_overall,
                     const std::vector<uint8_t>& actual_overall) {
    if (predicted_overall.size() != actual_overall.size() || predicted_overall.empty())
        throw std::invalid_argument("shed_accuracy: size mismatch");
    int l1 = 0;
    for (std::size_t i = 0; i < predicted_overall.size(); ++i)
        l1 += (predicted_overall[i] != 0) != (actual_overall[i] != 0) ? 1 : 0;
    return 1.0 - static_cast<double>(l1) / static_cast<double>(predicted_overall.size());
}

std::vector<uint8_t> overall_shed_vector(const CascadeSample& sample) {
    std::size_t n = 0;
    for (const auto& l : sample.load_served) n = std::max(n, l.size());
    std::vector<uint8_t> overall(n, 0);
    for (const auto& l : sample.load_served)
        for (std::size_t i = 0; i < l.size(); ++i)
            if (!l[i]) overall[i] = 1;
    return overall;
}

std::vector<uint8_t> overall_shed_vector(const PredictedLoadShed& prediction) {
    std::size_t n = prediction.served.empty() ? 0 : prediction.served[0].size();
    std::vector<uint8_t> overall(n, 0);
    for (const auto& l : prediction.served)
        for (std::size_t i = 0; i < l.size(); ++i)
            if (!l[i]) overall[i] = 1;
    return overall;
}

double shed_accuracy(const PredictedLoadShed& prediction, const CascadeSample& sample) {
    auto predicted = overall_shed_vector(prediction);
    auto actual = overall_shed_vector(sample);
    const std::size_t n = std::max(predicted.size(), actual.size());
    predicted.resize(n, 0);
    actual.resize(n, 0);
    return shed_accuracy(predicted, actual);
}

LossReport pool_losses(const SamplePool& pool, const std::vector<double>& cost_weights,
                       const std::vector<double>& shed_priorities, const LossOptions& opts) {
    LossReport rep;
    for (const auto& s : pool.samples) {
        rep.link_fail_per_sample.push_back(link_fail_loss(s, cost_weights, opts));
        rep.load_shed_per_sample.push_back(load_shed_loss(s, shed_priorities, opts));
    }
    const auto n = static_cast<double>(pool.samples.size());
    if (n > 0) {
        rep.link_fail_mean =
            std::accumulate(rep.link_fail_per_sample.begin(), rep.link_fail_per_sample.end(), 0.0) / n;
        rep.load_shed_mean =
            std::accumulate(rep.load_shed_per_sample.begin(), rep.load_shed_per_sample.end(), 0.0) / n;
    }
    return rep;
}

}  // namespace gridcast
