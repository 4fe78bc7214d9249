#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridcast/cascade.hpp"
#include "gridcast/influence.hpp"
#include "gridcast/network.hpp"
#include "gridcast/predict.hpp"
#include "gridcast/sample.hpp"

namespace gridcast::pipeline {

struct RunConfig {
    std::string case_path;
    std::string dialect;  // empty -> by extension
    std::vector<double> loadings{1.0};
    Policy policy = Policy::none;
    int samples = 300;
    uint64_t seed = 1;
    double split = 0.9;
    double alpha_d = 0.9;
    double alpha_e = 0.9;
    SolverConfig solver;
    unsigned threads = 0;
    std::string pool_path;
    std::string model_path;
    std::string out_path;
};

std::string config_hash(const RunConfig& cfg, const std::string& case_hash, double loading);

// File-name helpers shared by the CLI, the report command and the tests.
std::string loading_tag(double c);  // 1.25 -> "c1.25"
std::string pool_file_name(Policy policy, double loading);
std::string model_file_name(Policy policy, double loading);

struct SimulateLevelResult {
    double loading = 1.0;
    bool skipped = false;
    std::string skip_reason;
    std::string pool_path;
};

struct SimulateResult {
    std::vector<SimulateLevelResult> levels;
};

// One pool file plus manifest per loading level. Levels whose corrective
// policy cannot initialize at full health (full-service OPF already in
// fallback before any contingency) are skipped with the reason recorded.
SimulateResult cmd_simulate(const RunConfig& cfg);

// pool -> model.json
void cmd_train(const RunConfig& cfg);

struct PredictRequest {
    std::string model_path;
    std::vector<int> contingency;  // two 0-based branch ids
    double loading = 1.0;
    PredictionMode mode = PredictionMode::advisory;
    std::string states_pool_path;  // eval mode: pool with the true states
};

struct PredictArtifacts {
    PredictedCascade cascade;
    PredictedLoadShed load_shed;
    PredictionMode mode = PredictionMode::advisory;
    std::string case_hash;
    std::string config_hash;
};

PredictArtifacts run_prediction(const InfluenceModel& model, const PredictRequest& req,
                                const SamplePool* states_pool);
std::string prediction_to_json(const PredictArtifacts& artifacts);
void cmd_predict(const PredictRequest& req, const std::string& out_path);

struct SplitAccuracy {
    double link = 0.0;
    double shed = 0.0;
    int n_samples = 0;
};

struct EvaluationReport {
    SplitAccuracy train;
    SplitAccuracy test;
    double link_fail_loss_mean = 0.0;  // over the whole pool
    double load_shed_loss_mean = 0.0;
    double local_influence_loss = 0.0;
    double frac_t1 = 0.0;
    std::string case_hash;
    Policy policy = Policy::none;
    double loading = 1.0;
};

EvaluationReport evaluate_model(const Network& net, const InfluenceModel& model,
                                const SamplePool& pool);
void cmd_evaluate(const RunConfig& cfg);

struct TimingReport {
    double mean_sim_ms = 0.0;
    double mean_predict_ms = 0.0;
    double ratio = 0.0;  // predict / sim
    int n_samples = 0;
};

// Wall-clock comparison of the oracle and the flow-free predictor over the
// pool's test split.
TimingReport measure_timing(const Network& net, const InfluenceModel& model,
                            const SamplePool& pool, const SolverConfig& solver);

struct ReportOptions {
    std::string case_path;
    std::string artifacts_dir;  // where pools/models live (and are written with --all)
    std::string out_dir;
    bool run_all = false;       // simulate+train anything missing
    std::vector<Policy> policies{Policy::none, Policy::redispatch_full, Policy::redispatch_smart};
    std::vector<double> loadings{0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8};
    int samples = 300;
    uint64_t seed = 1;
    double split = 0.9;
    double alpha_d = 0.9;
    double alpha_e = 0.9;
    SolverConfig solver;
    unsigned threads = 0;
    bool with_timing = true;
};

// Emits report.json, losses.csv, accuracy.csv, timing.json and the D/E
// heat-map matrices for every (policy, level) artifact pair found.
void cmd_report(const ReportOptions& opts);

// Machine-readable error envelope used by the CLI on nonzero exits.
std::string error_json(const std::string& code, const std::string& message,
                       const std::string& detail = "");

}  // namespace gridcast::pipeline
