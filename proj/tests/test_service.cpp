#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "advisory.hpp"
#include "gridcast/case_io.hpp"
#include "gridcast/losses.hpp"
#include "helpers.hpp"
#include "httplib.h"
#include "json.hpp"
#include "pipeline.hpp"

using namespace gridcast;
using namespace testutil;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// One advisory service over a store built once for the whole file: a case,
// exp-1 and exp-3 models at 1.2x, and the exp-1 pool for eval mode.
struct ServiceFixture {
    fs::path store;
    httplib::Server server;
    std::thread thread;
    int port = 0;
    Network net;

    ServiceFixture() {
        store = fs::temp_directory_path() / "gridcast_service_store";
        fs::remove_all(store);
        fs::create_directories(store);
        net = load_case_file(data_file("ieee30.m"));
        save_case_file(net, (store / "ieee30.json").string());

        pipeline::RunConfig sim;
        sim.case_path = data_file("ieee30.m");
        sim.samples = 60;
        sim.seed = 21;
        sim.loadings = {1.2};
        sim.policy = Policy::none;
        sim.out_path = (store / "pool_none.jsonl").string();
        pipeline::cmd_simulate(sim);
        sim.policy = Policy::redispatch_smart;
        sim.out_path = (store / "pool_smart.jsonl").string();
        pipeline::cmd_simulate(sim);

        pipeline::RunConfig train;
        train.pool_path = (store / "pool_none.jsonl").string();
        train.out_path = (store / "model_none.json").string();
        pipeline::cmd_train(train);
        train.pool_path = (store / "pool_smart.jsonl").string();
        train.out_path = (store / "model_smart.json").string();
        pipeline::cmd_train(train);

        fs::create_directories(store / "ui");
        std::ofstream(store / "ui" / "index.html") << "<html>console placeholder</html>";
        auto store_ptr = std::make_shared<advisory::Store>(store.string());
        advisory::register_routes(server, store_ptr, (store / "ui").string());
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~ServiceFixture() {
        server.stop();
        if (thread.joinable()) thread.join();
        std::error_code ec;
        fs::remove_all(store, ec);
    }

    httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

ServiceFixture& fixture() {
    static ServiceFixture f;
    return f;
}

}  // namespace

TEST_CASE("listings expose hashes that match the CLI artifacts") {
    auto cli = fixture().client();
    const auto cases = cli.Get("/cases");
    REQUIRE(cases);
    REQUIRE(cases->status == 200);
    const json cases_doc = json::parse(cases->body);
    REQUIRE(cases_doc["cases"].size() == 1);
    CHECK(cases_doc["cases"][0]["id"] == "ieee30");
    CHECK(cases_doc["cases"][0]["hash"] == case_hash_hex(fixture().net));
    CHECK(cases_doc["cases"][0]["n_branches"] == 41);

    const auto models = cli.Get("/models");
    REQUIRE(models);
    const json models_doc = json::parse(models->body);
    CHECK(models_doc["models"].size() == 2);
    const PoolManifest manifest = PoolManifest::from_json([&] {
        std::ifstream in(fixture().store / "pool_none.jsonl.manifest.json");
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    }());
    for (const auto& m : models_doc["models"]) CHECK(m["case_hash"] == manifest.case_hash);
    CHECK(cli.Get("/cases")->get_header_value("Access-Control-Allow-Origin") == "*");
}

TEST_CASE("predict endpoint mirrors the CLI code path bit for bit") {
    auto cli = fixture().client();
    const SamplePool pool = load_pool((fixture().store / "pool_none.jsonl").string());
    const InfluenceModel model = load_model((fixture().store / "model_none.json").string());
    const auto& sample = pool.samples[0];

    json body;
    body["model_id"] = "model_none";
    body["contingency"] = {sample.initial_failures[0] + 1, sample.initial_failures[1] + 1};
    body["loading_c"] = 1.2;
    body["mode"] = "eval";
    body["pool_id"] = "pool_none";
    const auto res = cli.Post("/predict", body.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);

    pipeline::PredictRequest req;
    req.contingency = sample.initial_failures;
    req.loading = 1.2;
    req.mode = PredictionMode::eval;
    const auto direct = pipeline::run_prediction(model, req, &pool);
    const json expected = {
        {"cascade", json::parse(pipeline::prediction_to_json(direct))["cascade"]},
        {"load_shed", json::parse(pipeline::prediction_to_json(direct))["load_shed"]},
        {"mode", "eval"}};
    CHECK(json::parse(res->body) == expected);
}

TEST_CASE("predict rejects unknown models and bad contingencies") {
    auto cli = fixture().client();
    json body;
    body["model_id"] = "nope";
    body["contingency"] = {1, 2};
    CHECK(cli.Post("/predict", body.dump(), "application/json")->status == 404);

    body["model_id"] = "model_none";
    body["contingency"] = {3, 3};
    const auto res = cli.Post("/predict", body.dump(), "application/json");
    CHECK(res->status == 422);
    CHECK(json::parse(res->body)["code"] == "invalid_contingency");

    body["contingency"] = {1, 999};
    CHECK(cli.Post("/predict", body.dump(), "application/json")->status == 422);
}

TEST_CASE("smart-policy model predicts no propagation") {
    auto cli = fixture().client();
    json body;
    body["model_id"] = "model_smart";
    body["contingency"] = {4, 18};
    body["loading_c"] = 1.2;
    body["mode"] = "advisory";
    const auto res = cli.Post("/predict", body.dump(), "application/json");
    REQUIRE(res->status == 200);
    const json doc = json::parse(res->body);
    const auto& states = doc["cascade"]["states"];
    CHECK(states.front() == states.back());
}

TEST_CASE("batch prediction over the test split equals cmd_evaluate accuracies") {
    auto cli = fixture().client();
    const SamplePool pool = [&] {
        SamplePool p = load_pool((fixture().store / "pool_none.jsonl").string());
        const PoolManifest manifest = PoolManifest::from_json([&] {
            std::ifstream in(fixture().store / "pool_none.jsonl.manifest.json");
            std::ostringstream buf;
            buf << in.rdbuf();
            return buf.str();
        }());
        p.train_ids = manifest.train_ids;
        p.test_ids = manifest.test_ids;
        return p;
    }();
    const InfluenceModel model = load_model((fixture().store / "model_none.json").string());
    const auto report = pipeline::evaluate_model(fixture().net, model, pool);

    double link_acc = 0.0, shed_acc = 0.0;
    const auto test = pool.test_samples();
    for (const CascadeSample* s : test) {
        json body;
        body["model_id"] = "model_none";
        body["contingency"] = {s->initial_failures[0] + 1, s->initial_failures[1] + 1};
        body["loading_c"] = s->loading_c;
        body["mode"] = "eval";
        body["pool_id"] = "pool_none";
        const auto res = cli.Post("/predict", body.dump(), "application/json");
        REQUIRE(res->status == 200);
        const json doc = json::parse(res->body);
        std::vector<uint8_t> final_state;
        for (const auto& v : doc["cascade"]["states"].back()) final_state.push_back(v.get<int>());
        link_acc += link_accuracy(final_state, s->states.back());
        // Overall shed vector from the served rows aligned with l[1..T-1].
        std::vector<uint8_t> overall(fixture().net.n_buses(), 0);
        const auto& served = doc["load_shed"]["served"];
        const std::size_t steps = std::max<std::size_t>(1, s->states.size() - 1);
        for (std::size_t t = 0; t < steps && t < served.size(); ++t)
            for (std::size_t i = 0; i < served[t].size(); ++i)
                if (served[t][i].get<int>() == 0) overall[i] = 1;
        auto actual = overall_shed_vector(*s);
        actual.resize(overall.size(), 0);
        shed_acc += shed_accuracy(overall, actual);
    }
    link_acc /= static_cast<double>(test.size());
    shed_acc /= static_cast<double>(test.size());
    CHECK(link_acc == doctest::Approx(report.test.link).epsilon(1e-12));
    CHECK(shed_acc == doctest::Approx(report.test.shed).epsilon(1e-12));
}

TEST_CASE("advise ranks strategies by the weighted composite") {
    auto cli = fixture().client();
    json body;
    body["case_id"] = "ieee30";
    body["contingency"] = {10, 41};
    body["loading_c"] = 1.2;
    body["strategies"] = {"none", "redispatch-smart"};

    SUBCASE("degenerate weights rank by link loss alone") {
        body["weights"] = {1.0, 0.0};
        const auto res = cli.Post("/advise", body.dump(), "application/json");
        REQUIRE(res->status == 200);
        const json doc = json::parse(res->body);
        REQUIRE(doc["results"].size() == 2);
        double best_link = 1e18;
        std::string best;
        for (const auto& r : doc["results"])
            if (r["link_fail_loss"].get<double>() < best_link) {
                best_link = r["link_fail_loss"].get<double>();
                best = r["strategy"];
            }
        CHECK(doc["ranking"][0] == best);
    }
    SUBCASE("smart redispatch wins on load shed at elevated loading") {
        body["weights"] = {0.0, 1.0};
        const auto res = cli.Post("/advise", body.dump(), "application/json");
        REQUIRE(res->status == 200);
        const json doc = json::parse(res->body);
        CHECK(doc["ranking"][0] == "redispatch-smart");
    }
    SUBCASE("single strategy gets rank one") {
        body["strategies"] = {"none"};
        const auto res = cli.Post("/advise", body.dump(), "application/json");
        const json doc = json::parse(res->body);
        REQUIRE(doc["results"].size() == 1);
        CHECK(doc["results"][0]["rank"] == 1);
    }
    SUBCASE("strategy without a model is flagged, others returned") {
        body["strategies"] = {"none", "redispatch-full"};
        const auto res = cli.Post("/advise", body.dump(), "application/json");
        const json doc = json::parse(res->body);
        REQUIRE(doc["results"].size() == 2);
        bool saw_flag = false, saw_ranked = false;
        for (const auto& r : doc["results"]) {
            if (!r["available"].get<bool>()) {
                CHECK(r.contains("flag"));
                saw_flag = true;
            } else {
                saw_ranked = true;
            }
        }
        CHECK(saw_flag);
        CHECK(saw_ranked);
    }
    SUBCASE("oracle flag runs the simulator instead") {
        const auto res = cli.Post("/advise?oracle=true", body.dump(), "application/json");
        REQUIRE(res->status == 200);
        const json doc = json::parse(res->body);
        for (const auto& r : doc["results"]) CHECK(r["oracle"] == true);
    }
    SUBCASE("rejects empty strategies and zero weights") {
        body["strategies"] = json::array();
        CHECK(cli.Post("/advise", body.dump(), "application/json")->status == 422);
        body["strategies"] = {"none"};
        body["weights"] = {0.0, 0.0};
        CHECK(cli.Post("/advise", body.dump(), "application/json")->status == 422);
    }
}

TEST_CASE("criticality endpoint equals the library computation") {
    auto cli = fixture().client();
    const auto res = cli.Get("/criticality?model_id=model_none");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    const json doc = json::parse(res->body);
    const InfluenceModel model = load_model((fixture().store / "model_none.json").string());
    const auto rep = criticality(model.link_model, model.shed_model);
    REQUIRE(doc["cd"].size() == rep.cd.size());
    for (std::size_t i = 0; i < rep.cd.size(); ++i)
        CHECK(doc["cd"][i].get<double>() == doctest::Approx(rep.cd[i]).epsilon(1e-12));
    CHECK(doc["ranking_cd"][0].get<int>() == rep.ranking_cd[0] + 1);
    CHECK(cli.Get("/criticality?model_id=ghost")->status == 404);
}

TEST_CASE("static assets and CORS preflight for the browser console") {
    auto cli = fixture().client();
    const auto page = cli.Get("/index.html");
    REQUIRE(page);
    CHECK(page->status == 200);
    CHECK(page->body.find("console placeholder") != std::string::npos);

    const auto preflight = cli.Options("/advise");
    REQUIRE(preflight);
    CHECK(preflight->status == 204);
    CHECK(preflight->get_header_value("Access-Control-Allow-Methods").find("POST") !=
          std::string::npos);
}

TEST_CASE("concurrent identical requests return identical bodies") {
    json body;
    body["model_id"] = "model_none";
    body["contingency"] = {5, 17};
    body["loading_c"] = 1.2;
    body["mode"] = "advisory";
    const std::string payload = body.dump();

    std::vector<std::string> results(4);
    std::vector<std::thread> workers;
    for (int t = 0; t < 4; ++t)
        workers.emplace_back([&, t] {
            auto cli = fixture().client();
            const auto res = cli.Post("/predict", payload, "application/json");
            if (res && res->status == 200) results[t] = res->body;
        });
    for (auto& w : workers) w.join();
    for (int t = 1; t < 4; ++t) {
        REQUIRE(!results[t].empty());
        CHECK(results[t] == results[0]);
    }
}
