#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gridcast/case_io.hpp"
#include "gridcast/sample.hpp"
#include "pipeline.hpp"

namespace {

using gridcast::Policy;
using namespace gridcast::pipeline;

std::vector<double> parse_loadings(const std::vector<std::string>& raw) {
    std::vector<double> out;
    for (const auto& item : raw) {
        std::size_t pos = 0;
        while (pos < item.size()) {
            const std::size_t comma = item.find(',', pos);
            const std::string tok = item.substr(pos, comma == std::string::npos ? std::string::npos
                                                                                : comma - pos);
            if (!tok.empty()) out.push_back(std::stod(tok));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    if (out.empty()) out.push_back(1.0);
    for (double c : out)
        if (c <= 0) throw CLI::ValidationError("--loading", "loading values must be positive");
    return out;
}

std::vector<int> parse_contingency(const std::string& raw) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos < raw.size()) {
        const std::size_t comma = raw.find(',', pos);
        const std::string tok =
            raw.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!tok.empty()) out.push_back(std::stoi(tok) - 1);  // external ids are 1-based
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Failure-cascade workbench: simulate, train, predict, evaluate, report"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::vector<std::string> loading_raw;
    std::string policy_name_arg = "none";
    std::string contingency_raw;
    std::string mode_raw = "advisory";
    std::string states_path;
    std::string artifacts_dir;
    bool run_all = false;
    bool no_timing = false;
    std::vector<std::string> policies_raw;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", cfg.seed, "Master RNG seed");
        cmd->add_option("--split", cfg.split, "Training split fraction")->check(CLI::Range(0.01, 0.99));
    };

    CLI::App* simulate = app.add_subcommand("simulate", "Generate Monte Carlo cascade pools");
    simulate->add_option("--case", cfg.case_path, "Case file")->required();
    simulate->add_option("--dialect", cfg.dialect, "Case dialect: native-json | matpower-m");
    simulate->add_option("--loading", loading_raw, "Loading multiplier(s), comma separated");
    simulate->add_option("--policy", policy_name_arg,
                         "Corrective policy: none | redispatch-full | redispatch-smart");
    simulate->add_option("--samples", cfg.samples, "Samples per loading level")
        ->check(CLI::Range(2, 1000000));
    simulate->add_option("--out", cfg.out_path, "Pool file (single level) or directory");
    add_common(simulate);

    CLI::App* train = app.add_subcommand("train", "Train influence models from a pool");
    train->add_option("--pool", cfg.pool_path, "Pool JSONL file")->required();
    train->add_option("--out", cfg.out_path, "Model file")->required();
    train->add_option("--alpha-d", cfg.alpha_d, "Never-fails threshold factor")
        ->check(CLI::Range(1e-9, 1.0));
    train->add_option("--alpha-e", cfg.alpha_e, "Never-sheds threshold factor")
        ->check(CLI::Range(1e-9, 1.0));

    CLI::App* predict = app.add_subcommand("predict", "Flow-free cascade and shed prediction");
    predict->add_option("--model", cfg.model_path, "Model file")->required();
    predict->add_option("--contingency", contingency_raw, "Two branch ids, e.g. \"3,17\"")
        ->required();
    predict->add_option("--loading", loading_raw, "Loading multiplier");
    predict->add_option("--mode", mode_raw, "advisory | eval");
    predict->add_option("--states", states_path, "Pool with true states (eval mode)");
    predict->add_option("--out", cfg.out_path, "Output JSON (default stdout)");

    CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate a model against a pool");
    evaluate->add_option("--case", cfg.case_path, "Case file")->required();
    evaluate->add_option("--dialect", cfg.dialect, "Case dialect");
    evaluate->add_option("--model", cfg.model_path, "Model file")->required();
    evaluate->add_option("--pool", cfg.pool_path, "Pool JSONL file")->required();
    evaluate->add_option("--out", cfg.out_path, "Report JSON (default stdout)");

    CLI::App* report = app.add_subcommand("report", "Aggregate tables, heat maps and timing");
    report->add_option("--case", cfg.case_path, "Case file")->required();
    report->add_option("--out", cfg.out_path, "Output directory")->required();
    report->add_option("--artifacts", artifacts_dir, "Pool/model directory (default: out dir)");
    report->add_flag("--all", run_all, "Run the full pipeline for every policy and level");
    report->add_option("--policy", policies_raw, "Policies to include (repeatable)");
    report->add_option("--loading", loading_raw, "Loading sweep, comma separated");
    report->add_option("--samples", cfg.samples, "Samples per level (with --all)");
    report->add_option("--alpha-d", cfg.alpha_d, "Never-fails threshold factor");
    report->add_option("--alpha-e", cfg.alpha_e, "Never-sheds threshold factor");
    report->add_flag("--no-timing", no_timing, "Skip wall-clock measurements");
    add_common(report);

    try {
        app.parse(argc, argv);

        if (simulate->parsed()) {
            cfg.loadings = parse_loadings(loading_raw);
            cfg.policy = gridcast::policy_from_name(policy_name_arg);
            cmd_simulate(cfg);
            return 0;
        }
        if (train->parsed()) {
            cmd_train(cfg);
            return 0;
        }
        if (predict->parsed()) {
            PredictRequest req;
            req.model_path = cfg.model_path;
            req.contingency = parse_contingency(contingency_raw);
            req.loading = parse_loadings(loading_raw)[0];
            req.mode = gridcast::mode_from_name(mode_raw);
            req.states_pool_path = states_path;
            cmd_predict(req, cfg.out_path);
            return 0;
        }
        if (evaluate->parsed()) {
            cmd_evaluate(cfg);
            return 0;
        }
        if (report->parsed()) {
            ReportOptions opts;
            opts.case_path = cfg.case_path;
            opts.out_dir = cfg.out_path;
            opts.artifacts_dir = artifacts_dir;
            opts.run_all = run_all;
            if (!policies_raw.empty()) {
                opts.policies.clear();
                for (const auto& p : policies_raw)
                    opts.policies.push_back(gridcast::policy_from_name(p));
            }
            if (!loading_raw.empty()) opts.loadings = parse_loadings(loading_raw);
            opts.samples = cfg.samples;
            opts.seed = cfg.seed;
            opts.split = cfg.split;
            opts.alpha_d = cfg.alpha_d;
            opts.alpha_e = cfg.alpha_e;
            opts.with_timing = !no_timing;
            cmd_report(opts);
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const gridcast::ParseError& e) {
        std::fputs(error_json("parse_error",
                              e.what(),
                              "line " + std::to_string(e.line) + ", column " +
                                  std::to_string(e.column))
                       .c_str(),
                   stderr);
        return 2;
    } catch (const std::exception& e) {
        std::fputs(error_json("error", e.what()).c_str(), stderr);
        return 1;
    }
    return 0;
}
