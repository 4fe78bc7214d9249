#include "advisory.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gridcast/case_io.hpp"
#include "gridcast/cascade.hpp"
#include "gridcast/log.hpp"
#include "gridcast/losses.hpp"
#include "gridcast/predict.hpp"
#include "httplib.h"
#include "json.hpp"
#include "pipeline.hpp"

namespace gridcast::advisory {

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

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct HttpError : std::runtime_error {
    HttpError(int status_, std::string code_, std::string message_, std::string detail_ = "")
        : std::runtime_error(message_), status(status_), code(std::move(code_)),
          detail(std::move(detail_)) {}
    int status;
    std::string code;
    std::string detail;
};

void reply_error(httplib::Response& res, const HttpError& e) {
    res.status = e.status;
    res.set_content(json{{"code", e.code}, {"message", e.what()}, {"detail", e.detail}}.dump(),
                    "application/json");
}

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

Store::Store(std::string dir) : dir_(std::move(dir)) { scan(); }

void Store::scan() {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!fs::is_directory(dir_)) return;
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir_))
        if (entry.is_regular_file()) names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    for (const auto& name : names) {
        const std::string stem = fs::path(name).stem().string();
        try_load(stem);
    }
}

// Must be called with (or safely without) the lock held only from scan();
// the public lookups take the lock themselves.
bool Store::try_load(const std::string& id) const {
    if (cases_.count(id) || models_.count(id) || pools_.count(id)) return true;
    const fs::path base = fs::path(dir_) / id;
    const std::vector<std::string> json_ext{".json"};
    try {
        if (fs::exists(base.string() + ".jsonl")) {
            auto pool = std::make_shared<SamplePool>(load_pool(base.string() + ".jsonl"));
            pools_[id] = PoolEntry{id, std::move(pool)};
            return true;
        }
        if (fs::exists(base.string() + ".m")) {
            auto net = std::make_shared<Network>(load_case_file(base.string() + ".m"));
            cases_[id] = CaseEntry{id, case_hash_hex(*net), std::move(net)};
            return true;
        }
        if (fs::exists(base.string() + ".json")) {
            const std::string text = read_file(base.string() + ".json");
            const json doc = json::parse(text);
            if (doc.contains("a11")) {
                auto model = std::make_shared<InfluenceModel>(model_from_json(text));
                models_[id] = ModelEntry{id, hex64(fnv1a(text)), std::move(model)};
                return true;
            }
            if (doc.contains("buses")) {
                auto net = std::make_shared<Network>(parse_case(text, CaseDialect::native_json));
                cases_[id] = CaseEntry{id, case_hash_hex(*net), std::move(net)};
                return true;
            }
        }
    } catch (const std::exception& e) {
        log_warn("store: skipping %s (%s)", id.c_str(), e.what());
    }
    return false;
}

std::vector<Store::CaseEntry> Store::cases() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<CaseEntry> out;
    for (const auto& [id, entry] : cases_) out.push_back(entry);
    return out;
}

std::vector<Store::ModelEntry> Store::models() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<ModelEntry> out;
    for (const auto& [id, entry] : models_) out.push_back(entry);
    return out;
}

std::shared_ptr<const Network> Store::find_case(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    try_load(id);
    const auto it = cases_.find(id);
    return it == cases_.end() ? nullptr : it->second.net;
}

std::shared_ptr<const InfluenceModel> Store::find_model(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    try_load(id);
    const auto it = models_.find(id);
    return it == models_.end() ? nullptr : it->second.model;
}

std::shared_ptr<const SamplePool> Store::find_pool(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    try_load(id);
    const auto it = pools_.find(id);
    return it == pools_.end() ? nullptr : it->second.pool;
}

std::string Store::model_file_hash(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = models_.find(id);
    return it == models_.end() ? "" : it->second.file_hash;
}

std::shared_ptr<const InfluenceModel> Store::match_model(const std::string& case_hash,
                                                         Policy policy, double loading) const {
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& [id, entry] : models_) {
        const auto& m = *entry.model;
        if (m.case_hash == case_hash && m.policy == policy &&
            std::fabs(m.loading_c - loading) < 1e-9)
            return entry.model;
    }
    return nullptr;
}

namespace {

std::vector<int> contingency_from_json(const json& body, int n_branches) {
    if (!body.contains("contingency") || !body["contingency"].is_array() ||
        body["contingency"].size() != 2)
        throw HttpError(422, "invalid_contingency", "contingency must be an array of two branch ids");
    std::vector<int> out;
    for (const auto& v : body["contingency"]) {
        if (!v.is_number_integer())
            throw HttpError(422, "invalid_contingency", "branch ids must be integers");
        out.push_back(v.get<int>() - 1);
    }
    if (out[0] == out[1] || out[0] < 0 || out[1] < 0 || out[0] >= n_branches ||
        out[1] >= n_branches)
        throw HttpError(422, "invalid_contingency", "branch ids must be two distinct valid ids");
    return out;
}

json predict_body(const pipeline::PredictArtifacts& a) {
    return {{"mode", mode_name(a.mode)},
            {"cascade",
             {{"states", binary_rows(a.cascade.states)},
              {"probs", a.cascade.probs},
              {"termination_time", a.cascade.termination_time},
              {"thresholds", a.cascade.thresholds},
              {"loading_fallback", a.cascade.loading_fallback}}},
            {"load_shed",
             {{"served", binary_rows(a.load_shed.served)},
              {"probs", a.load_shed.probs},
              {"thresholds", a.load_shed.thresholds},
              {"loading_fallback", a.load_shed.loading_fallback}}}};
}

void handle_predict(const Store& store, const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) throw HttpError(400, "bad_request", "request body is not JSON");
    const std::string model_id = body.value("model_id", "");
    const auto model = store.find_model(model_id);
    if (!model) throw HttpError(404, "unknown_model", "no model with id '" + model_id + "'");

    pipeline::PredictRequest preq;
    preq.contingency = contingency_from_json(body, model->link_model.n_links());
    preq.loading = body.value("loading_c", model->loading_c);
    preq.mode = mode_from_name(body.value("mode", "advisory"));

    const SamplePool* pool_ptr = nullptr;
    std::shared_ptr<const SamplePool> pool;
    if (preq.mode == PredictionMode::eval) {
        pool = store.find_pool(body.value("pool_id", ""));
        if (!pool)
            throw HttpError(422, "missing_pool",
                            "eval mode needs pool_id naming a stored pool with true states");
        pool_ptr = pool.get();
    }
    try {
        const auto artifacts = pipeline::run_prediction(*model, preq, pool_ptr);
        res.set_content(predict_body(artifacts).dump(), "application/json");
    } catch (const std::invalid_argument& e) {
        throw HttpError(422, "invalid_request", e.what());
    }
}

void handle_advise(const Store& store, const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) throw HttpError(400, "bad_request", "request body is not JSON");
    const std::string case_id = body.value("case_id", "");
    const auto net = store.find_case(case_id);
    if (!net) throw HttpError(404, "unknown_case", "no case with id '" + case_id + "'");
    const std::string net_hash = case_hash_hex(*net);

    const auto contingency = contingency_from_json(body, net->n_branches());
    const double loading = body.value("loading_c", 1.0);
    if (loading <= 0) throw HttpError(422, "invalid_loading", "loading_c must be positive");

    std::vector<Policy> strategies;
    if (body.contains("strategies"))
        for (const auto& s : body["strategies"]) strategies.push_back(policy_from_name(s.get<std::string>()));
    if (strategies.empty())
        throw HttpError(422, "invalid_strategies", "strategies must name at least one policy");

    double w_link = 1.0, w_shed = 1.0;
    if (body.contains("weights")) {
        const auto& w = body["weights"];
        if (w.is_array() && w.size() == 2) {
            w_link = w[0].get<double>();
            w_shed = w[1].get<double>();
        } else if (w.is_object()) {
            w_link = w.value("link_fail", 1.0);
            w_shed = w.value("load_shed", 1.0);
        }
    }
    if (w_link < 0 || w_shed < 0 || (w_link == 0 && w_shed == 0))
        throw HttpError(422, "invalid_weights", "weights must be nonnegative and not both zero");

    const bool oracle = req.has_param("oracle") && req.get_param_value("oracle") == "true";
    const Network scaled = scale_loads(*net, {loading});
    const auto cost_weights = net->branch_cost_weights();
    const auto priorities = net->shed_priorities();
    const auto scaled_demand = scaled.demand();

    struct Entry {
        Policy strategy;
        bool available = false;
        std::string flag;
        double link_loss = 0.0;
        double shed_loss = 0.0;
        json body;
    };
    std::vector<Entry> entries;
    for (Policy strategy : strategies) {
        Entry e;
        e.strategy = strategy;
        if (oracle) {
            // Debug path: run the simulator instead of the trained model.
            const CascadeSample sample = run_cascade(
                *net, {loading}, {contingency[0], contingency[1]}, strategy, 0);
            e.available = true;
            e.link_loss = link_fail_loss(sample, cost_weights);
            e.shed_loss = load_shed_loss(sample, priorities);
            e.body = {{"oracle", true},
                      {"states", binary_rows(sample.states)},
                      {"load_served", binary_rows(sample.load_served)},
                      {"termination_time", sample.termination_time}};
            entries.push_back(std::move(e));
            continue;
        }
        const auto model = store.match_model(net_hash, strategy, loading);
        if (!model) {
            e.flag = "no trained model for this strategy at loading " + std::to_string(loading);
            entries.push_back(std::move(e));
            continue;
        }
        pipeline::PredictRequest preq;
        preq.contingency = contingency;
        preq.loading = loading;
        preq.mode = PredictionMode::advisory;
        const auto artifacts = pipeline::run_prediction(*model, preq, nullptr);
        e.available = true;
        e.link_loss = link_fail_loss(artifacts.cascade, cost_weights);
        e.shed_loss = load_shed_loss(artifacts.load_shed, scaled_demand, priorities);
        e.body = {{"predicted_cascade",
                   {{"states", binary_rows(artifacts.cascade.states)},
                    {"termination_time", artifacts.cascade.termination_time}}},
                  {"predicted_sheds", binary_rows(artifacts.load_shed.served)}};
        entries.push_back(std::move(e));
    }

    // Rank available strategies by the weighted composite, ascending;
    // ties keep request order.
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].available) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ca = w_link * entries[a].link_loss + w_shed * entries[a].shed_loss;
        const double cb = w_link * entries[b].link_loss + w_shed * entries[b].shed_loss;
        return ca < cb;
    });

    json results = json::array();
    std::vector<int> ranks(entries.size(), 0);
    for (std::size_t pos = 0; pos < order.size(); ++pos) ranks[order[pos]] = static_cast<int>(pos) + 1;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const Entry& e = entries[i];
        json item = {{"strategy", policy_name(e.strategy)},
                     {"available", e.available},
                     {"link_fail_loss", e.link_loss},
                     {"load_shed_loss", e.shed_loss},
                     {"composite", w_link * e.link_loss + w_shed * e.shed_loss},
                     {"rank", ranks[i]}};
        if (!e.flag.empty()) item["flag"] = e.flag;
        if (!e.body.is_null()) item.update(e.body);
        results.push_back(std::move(item));
    }
    json ranking = json::array();
    for (std::size_t idx : order) ranking.push_back(policy_name(entries[idx].strategy));
    res.set_content(json{{"results", std::move(results)},
                         {"ranking", std::move(ranking)},
                         {"weights", {{"link_fail", w_link}, {"load_shed", w_shed}}},
                         {"loading_c", loading}}
                        .dump(),
                    "application/json");
}

void handle_criticality(const Store& store, const httplib::Request& req, httplib::Response& res) {
    const std::string model_id = req.get_param_value("model_id");
    const auto model = store.find_model(model_id);
    if (!model) throw HttpError(404, "unknown_model", "no model with id '" + model_id + "'");
    const CriticalityReport rep = criticality(model->link_model, model->shed_model);
    json rank_cd = json::array(), rank_ce = json::array();
    for (int b : rep.ranking_cd) rank_cd.push_back(b + 1);
    for (int b : rep.ranking_ce) rank_ce.push_back(b + 1);
    res.set_content(json{{"model_id", model_id},
                         {"cd", rep.cd},
                         {"ce", rep.ce},
                         {"ranking_cd", std::move(rank_cd)},
                         {"ranking_ce", std::move(rank_ce)}}
                        .dump(),
                    "application/json");
}

}  // namespace

void register_routes(httplib::Server& server, std::shared_ptr<Store> store,
                     const std::string& ui_dir) {
    // The browser console is served from another origin during development.
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    auto guarded = [store](void (*fn)(const Store&, const httplib::Request&, httplib::Response&)) {
        return [store, fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(*store, req, res);
            } catch (const HttpError& e) {
                reply_error(res, e);
            } catch (const std::exception& e) {
                reply_error(res, HttpError(500, "internal_error", e.what()));
            }
        };
    };

    server.Get("/cases", [store](const httplib::Request&, httplib::Response& res) {
        json items = json::array();
        for (const auto& c : store->cases())
            items.push_back({{"id", c.id},
                             {"hash", c.hash},
                             {"n_buses", c.net->n_buses()},
                             {"n_branches", c.net->n_branches()},
                             {"n_generators", c.net->n_generators()}});
        res.set_content(json{{"cases", std::move(items)}}.dump(), "application/json");
    });

    server.Get("/models", [store](const httplib::Request&, httplib::Response& res) {
        json items = json::array();
        for (const auto& m : store->models())
            items.push_back({{"id", m.id},
                             {"hash", m.file_hash},
                             {"case_hash", m.model->case_hash},
                             {"policy", policy_name(m.model->policy)},
                             {"loading_c", m.model->loading_c}});
        res.set_content(json{{"models", std::move(items)}}.dump(), "application/json");
    });

    server.Post("/predict", guarded(handle_predict));
    server.Post("/advise", guarded(handle_advise));
    server.Get("/criticality", guarded(handle_criticality));

    if (!ui_dir.empty() && fs::is_directory(ui_dir)) server.set_mount_point("/", ui_dir);
}

}  // namespace gridcast::advisory
