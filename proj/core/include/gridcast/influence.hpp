#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridcast/linalg.hpp"
#include "gridcast/sample.hpp"

namespace gridcast {

// Matrix conventions, fixed project-wide:
//   A11(j,i) = P(link i alive at t+1 | link j alive at t)       (N_br x N_br)
//   A01(j,i) = P(link i alive at t+1 | link j dead  at t)
//   D(i,j)   = influence weight of link j on link i; rows sum to 1
//   B11(j,i) = P(bus i served at t | link j alive at t)         (N_br x N)
//   B01(j,i) = P(bus i served at t | link j dead  at t)
//   E(i,j)   = influence weight of link j on bus i; rows sum to 1

// One training contingency's thresholds, kept with its profile so a new
// contingency can be matched by loading level and initial-state distance.
struct ThresholdEntry {
    double loading_c = 1.0;
    std::vector<int> initial_failures;   // 0-based branch ids, sorted
    std::vector<double> thresholds;      // per link (epsilon) or per bus (delta)
};

// Flat copy of the per-entry loading levels and failure sets; threshold
// selection scans this instead of chasing one heap block per entry. When
// every entry is a branch pair, per-branch posting lists narrow the
// nearest-neighbour scan to the entries sharing a branch with the query,
// and for single-level pools the per-branch thresholds are kept pre-sorted
// per entity so tie medians reduce to a short two-list merge.
struct ThresholdIndex {
    std::vector<double> loadings;
    std::vector<int32_t> fail_offsets;  // size n_entries + 1
    std::vector<int32_t> fail_ids;
    bool uniform_pairs = false;
    bool single_level = false;
    std::size_t width = 0;  // thresholds per entry
    std::vector<int32_t> posting_offsets;  // size n_branches + 1
    std::vector<int32_t> posting_entries;
    // Per branch b and entity i: thresholds of posting(b)'s entries sorted
    // ascending, laid out at sorted_vals[posting_offsets[b]*width + i*|P(b)| + r].
    std::vector<double> sorted_vals;
    // Exact pair lookup: (lo * n_branches + hi) -> entry ids.
    std::vector<std::pair<int64_t, int32_t>> pair_entries;  // sorted by key

    bool empty() const { return loadings.empty(); }
};

ThresholdIndex build_threshold_index(const std::vector<ThresholdEntry>& pool);

struct InfluenceModelD {
    Matrix a11, a01;  // (j,i) indexed
    Matrix d;         // (i,j) indexed, row-stochastic
    std::vector<ThresholdEntry> threshold_pool;
    double alpha = 0.9;
    bool fit_converged = true;

    // Derived fast-path tables, never serialized: the all-alive product
    // and per-link kill rows so a prediction step only touches the links
    // that just died. Rebuilt after training or loading.
    Matrix kill_delta;                    // (j,i): d(i,j) * (a11(j,i) - a01(j,i))
    std::vector<double> all_alive_probs;  // product against the all-ones state
    ThresholdIndex threshold_index;

    int n_links() const { return static_cast<int>(d.rows()); }
    bool has_cache() const { return !all_alive_probs.empty(); }
    void rebuild_cache();
};

struct InfluenceModelE {
    Matrix b11, b01;  // (j,i) indexed
    Matrix e;         // (i,j) indexed, row-stochastic
    std::vector<ThresholdEntry> threshold_pool;
    double alpha = 0.9;
    bool fit_converged = true;

    Matrix kill_delta;                    // (j,i): e(i,j) * (b11(j,i) - b01(j,i))
    std::vector<double> all_alive_probs;
    ThresholdIndex threshold_index;

    int n_buses() const { return static_cast<int>(e.rows()); }
    int n_links() const { return static_cast<int>(e.cols()); }
    bool has_cache() const { return !all_alive_probs.empty(); }
    void rebuild_cache();
};

// Both models plus provenance, as stored in a model file.
struct InfluenceModel {
    InfluenceModelD link_model;
    InfluenceModelE shed_model;
    std::string case_hash;
    std::string config_hash;
    std::string pool_hash;
    uint64_t seed = 0;
    Policy policy = Policy::none;
    double loading_c = 1.0;
    int schema_version = 1;
};

// One step of the link dynamics: given the binary state s[t], the predicted
// probability of each link being alive at t+1.
std::vector<double> link_step_probs(const InfluenceModelD& m, const std::vector<uint8_t>& state);

// Service probability of each bus under the binary link state s[t].
std::vector<double> shed_step_probs(const InfluenceModelE& m, const std::vector<uint8_t>& state);

// Incremental evaluation of the step products along a monotone state
// sequence: links only die, so each step subtracts the kill rows of the
// newly dead links instead of recomputing the full product. Training and
// prediction both walk sequences through this type so threshold values and
// later predictions follow bit-identical arithmetic.
class StepChain {
public:
    const std::vector<double>& probs() const { return probs_; }
    const std::vector<uint8_t>& state() const { return state_; }
    void kill(int link);
    // Diffs against the next state and kills every newly dead link; a
    // revival violates the monotone contract and throws.
    void advance(const std::vector<uint8_t>& next);

private:
    friend StepChain link_chain(const InfluenceModelD&, const std::vector<uint8_t>&);
    friend StepChain shed_chain(const InfluenceModelE&, const std::vector<uint8_t>&);
    StepChain() = default;

    const Matrix& kill_rows() const { return shared_kill_rows_ ? *shared_kill_rows_ : owned_kill_rows_; }

    const Matrix* shared_kill_rows_ = nullptr;  // model cache, (j, entity)
    Matrix owned_kill_rows_;                    // backing storage for cacheless models
    std::vector<double> probs_;
    std::vector<uint8_t> state_;
};

StepChain link_chain(const InfluenceModelD& m, const std::vector<uint8_t>& initial);
StepChain shed_chain(const InfluenceModelE& m, const std::vector<uint8_t>& initial);

std::string model_to_json(const InfluenceModel& m);
InfluenceModel model_from_json(const std::string& text);
void save_model(const InfluenceModel& m, const std::string& path);
InfluenceModel load_model(const std::string& path);

}  // namespace gridcast
