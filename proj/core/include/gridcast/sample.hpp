#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gridcast {

enum class Policy { none, redispatch_full, redispatch_smart };

std::string policy_name(Policy p);
Policy policy_from_name(const std::string& name);

// One simulated cascade. States are 1-based in time: states[0] is s[1],
// the first state after the initial exogenous failures. load_served and
// shed_mw have one entry per transition (length T-1); shed amounts are
// the standing MW shortfall against the scaled demand during that step.
struct CascadeSample {
    int64_t sample_id = 0;
    double loading_c = 1.0;
    std::vector<int> initial_failures;              // exactly two branch indices (0-based)
    std::vector<std::vector<uint8_t>> states;       // s[1..T], 1 = alive
    std::vector<std::vector<uint8_t>> load_served;  // l[1..T-1], 1 = served in full
    std::vector<std::vector<double>> shed_mw;       // LS[1..T-1], MW per bus
    int termination_time = 1;                       // T
    Policy policy = Policy::none;

    // First step at which branch b is dead, or 0 if it never fails.
    int failure_step(int branch) const;
    // Throws std::invalid_argument on violated invariants (monotone
    // states, l <-> shed consistency, sequence lengths).
    void validate() const;
};

struct SamplePool {
    std::vector<CascadeSample> samples;
    std::vector<int64_t> train_ids;
    std::vector<int64_t> test_ids;

    int n_branches() const;
    int n_buses() const;
    std::vector<const CascadeSample*> training_samples() const;
    std::vector<const CascadeSample*> test_samples() const;

    // Deterministic head/tail split by sample_id order.
    void split(double train_fraction);
};

struct PoolManifest {
    std::string case_hash;
    std::string config_hash;
    uint64_t seed = 0;
    Policy policy = Policy::none;
    double loading_c = 1.0;
    int n_samples = 0;
    double split_fraction = 0.9;
    std::vector<int64_t> train_ids;
    std::vector<int64_t> test_ids;
    double frac_t1 = 0.0;   // fraction of samples that stop at T=1
    double mean_t = 0.0;
    int schema_version = 1;

    std::string to_json() const;
    static PoolManifest from_json(const std::string& text);
};

// JSON-lines pool files: one CascadeSample per line, branch/bus ids 1-based.
std::string sample_to_json(const CascadeSample& s);
CascadeSample sample_from_json(const std::string& line);

void save_pool(const SamplePool& pool, const std::string& path);
SamplePool load_pool(const std::string& path);

std::string manifest_path_for(const std::string& pool_path);

}  // namespace gridcast
