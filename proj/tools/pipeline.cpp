#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gridcast/case_io.hpp"
#include "gridcast/log.hpp"
#include "gridcast/losses.hpp"
#include "gridcast/train.hpp"
#include "json.hpp"

namespace gridcast::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

Network load_config_case(const RunConfig& cfg) {
    if (cfg.case_path.empty()) throw std::runtime_error("missing --case");
    return cfg.dialect.empty() ? load_case_file(cfg.case_path)
                               : load_case_file(cfg.case_path, dialect_from_name(cfg.dialect));
}

PoolManifest load_manifest(const std::string& pool_path) {
    return PoolManifest::from_json(read_file(manifest_path_for(pool_path)));
}

void apply_manifest_split(SamplePool& pool, const PoolManifest& manifest) {
    pool.train_ids = manifest.train_ids;
    pool.test_ids = manifest.test_ids;
}

}  // namespace

std::string config_hash(const RunConfig& cfg, const std::string& case_hash, double loading) {
    std::ostringstream s;
    s << case_hash << '|' << policy_name(cfg.policy) << '|' << loading << '|' << cfg.samples << '|'
      << cfg.seed << '|' << cfg.split << '|' << cfg.alpha_d << '|' << cfg.alpha_e << '|'
      << cfg.solver.feasibility_tol << '|' << cfg.solver.optimality_tol << '|'
      << cfg.solver.sigma_tol;
    return hex64(fnv1a(s.str()));
}

std::string loading_tag(double c) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "c%.4g", c);
    return buf;
}

std::string pool_file_name(Policy policy, double loading) {
    return "pool_" + policy_name(policy) + "_" + loading_tag(loading) + ".jsonl";
}

std::string model_file_name(Policy policy, double loading) {
    return "model_" + policy_name(policy) + "_" + loading_tag(loading) + ".json";
}

SimulateResult cmd_simulate(const RunConfig& cfg) {
    const Network net = load_config_case(cfg);
    const std::string net_hash = case_hash_hex(net);
    const bool multi = cfg.loadings.size() > 1;
    std::string out = cfg.out_path.empty() ? "." : cfg.out_path;
    if (multi) fs::create_directories(out);

    SimulateResult result;
    for (double c : cfg.loadings) {
        SimulateLevelResult level;
        level.loading = c;
        level.pool_path = multi || fs::is_directory(out)
                              ? (fs::path(out) / pool_file_name(cfg.policy, c)).string()
                              : out;

        PoolManifest manifest;
        manifest.case_hash = net_hash;
        manifest.config_hash = config_hash(cfg, net_hash, c);
        manifest.seed = cfg.seed;
        manifest.policy = cfg.policy;
        manifest.loading_c = c;
        manifest.n_samples = cfg.samples;
        manifest.split_fraction = cfg.split;

        if (cfg.policy == Policy::redispatch_full) {
            // The corrective policy must be able to initialize at full
            // health; when the full-service OPF already needs uniform
            // scaling before any contingency, the level is skipped.
            const Network scaled = scale_loads(net, {c});
            std::vector<uint8_t> alive(net.n_branches(), 1);
            const FlowSolution init = dc_opf_full_service(scaled, alive, scaled.demand(), cfg.solver);
            if (init.fallback_engaged) {
                level.skipped = true;
                level.skip_reason = "full-service OPF infeasible at full health (sigma=" +
                                    std::to_string(init.sigma) + ")";
                json j = json::parse(manifest.to_json());
                j["skipped"] = true;
                j["skip_reason"] = level.skip_reason;
                write_file(manifest_path_for(level.pool_path), j.dump(2) + "\n");
                log_warn("simulate: skipping loading %.4g (%s)", c, level.skip_reason.c_str());
                result.levels.push_back(std::move(level));
                continue;
            }
        }

        PoolConfig pool_cfg;
        pool_cfg.n_samples = cfg.samples;
        pool_cfg.split_fraction = cfg.split;
        pool_cfg.threads = cfg.threads;
        pool_cfg.solver = cfg.solver;
        SamplePool pool = generate_pool(net, {c}, cfg.policy, cfg.seed, pool_cfg);

        manifest.train_ids = pool.train_ids;
        manifest.test_ids = pool.test_ids;
        int t1 = 0;
        double t_sum = 0.0;
        for (const auto& s : pool.samples) {
            if (s.termination_time == 1) ++t1;
            t_sum += s.termination_time;
        }
        manifest.frac_t1 = static_cast<double>(t1) / static_cast<double>(pool.samples.size());
        manifest.mean_t = t_sum / static_cast<double>(pool.samples.size());

        save_pool(pool, level.pool_path);
        write_file(manifest_path_for(level.pool_path), manifest.to_json());
        log_info("simulate: %s (%zu samples, frac_t1=%.3f)", level.pool_path.c_str(),
                 pool.samples.size(), manifest.frac_t1);
        result.levels.push_back(std::move(level));
    }
    return result;
}

void cmd_train(const RunConfig& cfg) {
    if (cfg.pool_path.empty()) throw std::runtime_error("missing --pool");
    if (cfg.out_path.empty()) throw std::runtime_error("missing --out");
    const PoolManifest manifest = load_manifest(cfg.pool_path);
    SamplePool pool = load_pool(cfg.pool_path);
    apply_manifest_split(pool, manifest);

    TrainOptions opts;
    opts.alpha_d = cfg.alpha_d;
    opts.alpha_e = cfg.alpha_e;
    opts.threads = cfg.threads;
    InfluenceModel model = train_model(pool, opts);
    model.case_hash = manifest.case_hash;
    model.pool_hash = hex64(fnv1a(read_file(cfg.pool_path)));
    model.seed = manifest.seed;
    model.policy = manifest.policy;
    model.loading_c = manifest.loading_c;
    {
        std::ostringstream s;
        s << manifest.config_hash << '|' << cfg.alpha_d << '|' << cfg.alpha_e;
        model.config_hash = hex64(fnv1a(s.str()));
    }
    save_model(model, cfg.out_path);
}

PredictArtifacts run_prediction(const InfluenceModel& model, const PredictRequest& req,
                                const SamplePool* states_pool) {
    const int m = model.link_model.n_links();
    if (req.contingency.size() != 2 || req.contingency[0] == req.contingency[1])
        throw std::invalid_argument("contingency must name two distinct branches");
    for (int b : req.contingency)
        if (b < 0 || b >= m) throw std::invalid_argument("contingency branch out of range");

    std::vector<uint8_t> initial(m, 1);
    for (int b : req.contingency) initial[b] = 0;

    PredictArtifacts artifacts;
    artifacts.mode = req.mode;
    artifacts.case_hash = model.case_hash;
    artifacts.config_hash = model.config_hash;
    artifacts.cascade = predict_cascade(model.link_model, initial, req.loading);

    if (req.mode == PredictionMode::advisory) {
        artifacts.load_shed = predict_load_shed(model.shed_model, artifacts.cascade.states,
                                                req.loading);
        return artifacts;
    }
    if (!states_pool)
        throw std::invalid_argument("eval mode needs a pool with the true link states");
    std::vector<int> wanted = req.contingency;
    std::sort(wanted.begin(), wanted.end());
    const CascadeSample* match = nullptr;
    for (const auto& s : states_pool->samples) {
        if (std::fabs(s.loading_c - req.loading) < 1e-9 && s.initial_failures == wanted) {
            match = &s;
            break;
        }
    }
    if (!match)
        throw std::invalid_argument("no pool sample matches the contingency at this loading");
    artifacts.load_shed = predict_load_shed(model.shed_model, match->states, req.loading);
    return artifacts;
}

namespace {

json binary_rows(const std::vector<std::vector<uint8_t>>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        json row = json::array();
        for (uint8_t v : r) row.push_back(static_cast<int>(v));
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace

std::string prediction_to_json(const PredictArtifacts& a) {
    json j;
    j["mode"] = mode_name(a.mode);
    j["case_hash"] = a.case_hash;
    j["config_hash"] = a.config_hash;
    j["cascade"] = {{"states", binary_rows(a.cascade.states)},
                    {"probs", a.cascade.probs},
                    {"termination_time", a.cascade.termination_time},
                    {"thresholds", a.cascade.thresholds},
                    {"loading_fallback", a.cascade.loading_fallback}};
    j["load_shed"] = {{"served", binary_rows(a.load_shed.served)},
                      {"probs", a.load_shed.probs},
                      {"thresholds", a.load_shed.thresholds},
                      {"loading_fallback", a.load_shed.loading_fallback}};
    return j.dump(2) + "\n";
}

void cmd_predict(const PredictRequest& req, const std::string& out_path) {
    const InfluenceModel model = load_model(req.model_path);
    SamplePool pool;
    const SamplePool* pool_ptr = nullptr;
    if (!req.states_pool_path.empty()) {
        pool = load_pool(req.states_pool_path);
        pool_ptr = &pool;
    }
    const PredictArtifacts artifacts = run_prediction(model, req, pool_ptr);
    const std::string out = prediction_to_json(artifacts);
    if (out_path.empty() || out_path == "-")
        std::fputs(out.c_str(), stdout);
    else
        write_file(out_path, out);
}

EvaluationReport evaluate_model(const Network& net, const InfluenceModel& model,
                                const SamplePool& pool) {
    EvaluationReport rep;
    rep.case_hash = model.case_hash;
    rep.policy = model.policy;
    rep.loading = model.loading_c;

    auto eval_split = [&](const std::vector<const CascadeSample*>& samples) {
        SplitAccuracy acc;
        acc.n_samples = static_cast<int>(samples.size());
        for (const CascadeSample* s : samples) {
            const PredictedCascade cascade =
                predict_cascade(model.link_model, s->states[0], s->loading_c);
            acc.link += link_accuracy(cascade, *s);
            // True-state mode: service is predicted for exactly the steps
            // the oracle recorded (one per transition interval).
            const std::size_t steps = std::max<std::size_t>(1, s->states.size() - 1);
            const std::vector<std::vector<uint8_t>> prefix(s->states.begin(),
                                                           s->states.begin() + steps);
            const PredictedLoadShed shed =
                predict_load_shed(model.shed_model, prefix, s->loading_c);
            acc.shed += shed_accuracy(shed, *s);
        }
        if (acc.n_samples > 0) {
            acc.link /= acc.n_samples;
            acc.shed /= acc.n_samples;
        }
        return acc;
    };
    rep.train = eval_split(pool.training_samples());
    rep.test = eval_split(pool.test_samples());

    const LossReport losses = pool_losses(pool, net.branch_cost_weights(), net.shed_priorities());
    rep.link_fail_loss_mean = losses.link_fail_mean;
    rep.load_shed_loss_mean = losses.load_shed_mean;
    rep.local_influence_loss = local_influence_loss(model.link_model.d, line_graph_distance(net));
    int t1 = 0;
    for (const auto& s : pool.samples)
        if (s.termination_time == 1) ++t1;
    rep.frac_t1 = pool.samples.empty()
                      ? 0.0
                      : static_cast<double>(t1) / static_cast<double>(pool.samples.size());
    return rep;
}

namespace {

json evaluation_to_json(const EvaluationReport& rep) {
    return {{"case_hash", rep.case_hash},
            {"policy", policy_name(rep.policy)},
            {"loading_c", rep.loading},
            {"accuracy",
             {{"train",
               {{"link", rep.train.link}, {"shed", rep.train.shed}, {"n", rep.train.n_samples}}},
              {"test",
               {{"link", rep.test.link}, {"shed", rep.test.shed}, {"n", rep.test.n_samples}}}}},
            {"losses",
             {{"link_fail_mean", rep.link_fail_loss_mean},
              {"load_shed_mean", rep.load_shed_loss_mean},
              {"local_influence", rep.local_influence_loss}}},
            {"frac_t1", rep.frac_t1}};
}

void check_same_case(const std::string& a, const std::string& b, const std::string& what) {
    if (a != b)
        throw std::runtime_error("artifact case hash mismatch (" + what + "): " + a + " vs " + b);
}

}  // namespace

void cmd_evaluate(const RunConfig& cfg) {
    if (cfg.model_path.empty()) throw std::runtime_error("missing --model");
    if (cfg.pool_path.empty()) throw std::runtime_error("missing --pool");
    const Network net = load_config_case(cfg);
    const InfluenceModel model = load_model(cfg.model_path);
    const PoolManifest manifest = load_manifest(cfg.pool_path);
    SamplePool pool = load_pool(cfg.pool_path);
    apply_manifest_split(pool, manifest);

    check_same_case(model.case_hash, case_hash_hex(net), "model vs case");
    check_same_case(manifest.case_hash, case_hash_hex(net), "pool vs case");

    const EvaluationReport rep = evaluate_model(net, model, pool);
    const std::string out = evaluation_to_json(rep).dump(2) + "\n";
    if (cfg.out_path.empty() || cfg.out_path == "-")
        std::fputs(out.c_str(), stdout);
    else
        write_file(cfg.out_path, out);
}

TimingReport measure_timing(const Network& net, const InfluenceModel& model,
                            const SamplePool& pool, const SolverConfig& solver) {
    using clock = std::chrono::steady_clock;
    TimingReport rep;
    const auto samples = pool.test_samples();
    rep.n_samples = static_cast<int>(samples.size());
    if (samples.empty()) return rep;

    // A few repetitions per sample smooth scheduler jitter out of the
    // per-sample means; the ratio itself is unaffected.
    constexpr int kSimReps = 3;
    constexpr int kPredictReps = 16;
    for (const CascadeSample* s : samples) {
        const auto pair = std::make_pair(s->initial_failures[0], s->initial_failures[1]);
        const auto sim_start = clock::now();
        for (int r = 0; r < kSimReps; ++r) {
            const CascadeSample resim =
                run_cascade(net, {s->loading_c}, pair, s->policy, 0, solver);
            (void)resim;
        }
        const auto sim_end = clock::now();
        for (int r = 0; r < kPredictReps; ++r) {
            const PredictedCascade cascade =
                predict_cascade(model.link_model, s->states[0], s->loading_c);
            const PredictedLoadShed shed =
                predict_load_shed(model.shed_model, cascade.states, s->loading_c);
            (void)shed;
        }
        const auto predict_end = clock::now();
        rep.mean_sim_ms +=
            std::chrono::duration<double, std::milli>(sim_end - sim_start).count() / kSimReps;
        rep.mean_predict_ms +=
            std::chrono::duration<double, std::milli>(predict_end - sim_end).count() /
            kPredictReps;
    }
    rep.mean_sim_ms /= rep.n_samples;
    rep.mean_predict_ms /= rep.n_samples;
    rep.ratio = rep.mean_sim_ms > 0 ? rep.mean_predict_ms / rep.mean_sim_ms : 0.0;
    return rep;
}

namespace {

std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_heatmap(const std::string& path, const Matrix& m) {
    std::ostringstream out;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << csv_num(m(r, c));
        }
        out << '\n';
    }
    write_file(path, out.str());
}

}  // namespace

void cmd_report(const ReportOptions& opts) {
    if (opts.case_path.empty()) throw std::runtime_error("missing --case");
    const Network net = load_case_file(opts.case_path);
    const std::string net_hash = case_hash_hex(net);
    const std::string artifacts =
        opts.artifacts_dir.empty() ? opts.out_dir : opts.artifacts_dir;
    fs::create_directories(opts.out_dir);
    fs::create_directories(artifacts);

    if (opts.run_all) {
        for (Policy policy : opts.policies) {
            RunConfig sim;
            sim.case_path = opts.case_path;
            sim.loadings = opts.loadings;
            sim.policy = policy;
            sim.samples = opts.samples;
            sim.seed = opts.seed;
            sim.split = opts.split;
            sim.solver = opts.solver;
            sim.threads = opts.threads;
            sim.out_path = artifacts;
            const SimulateResult sim_result = cmd_simulate(sim);
            for (const auto& level : sim_result.levels) {
                if (level.skipped) continue;
                RunConfig train;
                train.pool_path = level.pool_path;
                train.out_path =
                    (fs::path(artifacts) / model_file_name(policy, level.loading)).string();
                train.alpha_d = opts.alpha_d;
                train.alpha_e = opts.alpha_e;
                train.threads = opts.threads;
                cmd_train(train);
            }
        }
    }

    json report;
    report["case_hash"] = net_hash;
    report["levels"] = opts.loadings;
    json timing = json::object();
    std::ostringstream losses_csv, accuracy_csv;
    losses_csv << "policy,loading,link_fail_loss,load_shed_loss,local_influence_loss\n";
    accuracy_csv << "policy,loading,split,link_accuracy,shed_accuracy\n";

    for (Policy policy : opts.policies) {
        json policy_block;
        json levels = json::array(), link_loss = json::array(), shed_loss = json::array(),
             local_loss = json::array(), acc_link_train = json::array(),
             acc_link_test = json::array(), acc_shed_train = json::array(),
             acc_shed_test = json::array(), frac_t1 = json::array();
        json skipped = json::object();
        json timing_block = json::object();

        for (double c : opts.loadings) {
            const std::string pool_path =
                (fs::path(artifacts) / pool_file_name(policy, c)).string();
            const std::string model_path =
                (fs::path(artifacts) / model_file_name(policy, c)).string();
            if (!fs::exists(pool_path)) {
                if (fs::exists(manifest_path_for(pool_path))) {
                    const json m = json::parse(read_file(manifest_path_for(pool_path)));
                    if (m.value("skipped", false))
                        skipped[loading_tag(c)] = m.value("skip_reason", "unknown");
                }
                continue;
            }
            if (!fs::exists(model_path)) continue;
            const PoolManifest manifest = load_manifest(pool_path);
            check_same_case(manifest.case_hash, net_hash, "pool vs case");
            SamplePool pool = load_pool(pool_path);
            apply_manifest_split(pool, manifest);
            const InfluenceModel model = load_model(model_path);
            check_same_case(model.case_hash, net_hash, "model vs case");

            const EvaluationReport rep = evaluate_model(net, model, pool);
            levels.push_back(c);
            link_loss.push_back(rep.link_fail_loss_mean);
            shed_loss.push_back(rep.load_shed_loss_mean);
            local_loss.push_back(rep.local_influence_loss);
            acc_link_train.push_back(rep.train.link);
            acc_link_test.push_back(rep.test.link);
            acc_shed_train.push_back(rep.train.shed);
            acc_shed_test.push_back(rep.test.shed);
            frac_t1.push_back(rep.frac_t1);

            losses_csv << policy_name(policy) << ',' << csv_num(c) << ','
                       << csv_num(rep.link_fail_loss_mean) << ','
                       << csv_num(rep.load_shed_loss_mean) << ','
                       << csv_num(rep.local_influence_loss) << '\n';
            accuracy_csv << policy_name(policy) << ',' << csv_num(c) << ",train,"
                         << csv_num(rep.train.link) << ',' << csv_num(rep.train.shed) << '\n';
            accuracy_csv << policy_name(policy) << ',' << csv_num(c) << ",test,"
                         << csv_num(rep.test.link) << ',' << csv_num(rep.test.shed) << '\n';

            write_heatmap((fs::path(opts.out_dir) /
                           ("heatmap_d_" + policy_name(policy) + "_" + loading_tag(c) + ".csv"))
                              .string(),
                          model.link_model.d);
            write_heatmap((fs::path(opts.out_dir) /
                           ("heatmap_e_" + policy_name(policy) + "_" + loading_tag(c) + ".csv"))
                              .string(),
                          model.shed_model.e);

            if (opts.with_timing) {
                const TimingReport t = measure_timing(net, model, pool, opts.solver);
                timing_block[loading_tag(c)] = {{"mean_sim_ms", t.mean_sim_ms},
                                                {"mean_predict_ms", t.mean_predict_ms},
                                                {"ratio", t.ratio},
                                                {"n_samples", t.n_samples}};
            }
        }
        policy_block["loading"] = std::move(levels);
        policy_block["link_fail_loss"] = std::move(link_loss);
        policy_block["load_shed_loss"] = std::move(shed_loss);
        policy_block["local_influence_loss"] = std::move(local_loss);
        policy_block["accuracy"] = {{"link", {{"train", acc_link_train}, {"test", acc_link_test}}},
                                    {"shed", {{"train", acc_shed_train}, {"test", acc_shed_test}}}};
        policy_block["frac_t1"] = std::move(frac_t1);
        policy_block["skipped"] = std::move(skipped);
        report["policies"][policy_name(policy)] = std::move(policy_block);
        timing[policy_name(policy)] = std::move(timing_block);
    }

    write_file((fs::path(opts.out_dir) / "report.json").string(), report.dump(2) + "\n");
    write_file((fs::path(opts.out_dir) / "losses.csv").string(), losses_csv.str());
    write_file((fs::path(opts.out_dir) / "accuracy.csv").string(), accuracy_csv.str());
    if (opts.with_timing)
        write_file((fs::path(opts.out_dir) / "timing.json").string(), timing.dump(2) + "\n");
}

std::string error_json(const std::string& code, const std::string& message,
                       const std::string& detail) {
    return json{{"code", code}, {"message", message}, {"detail", detail}}.dump() + "\n";
}

}  // namespace gridcast::pipeline
