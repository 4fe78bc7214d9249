#include "gridcast/sample.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace gridcast {

using nlohmann::json;

std::string policy_name(Policy p) {
    switch (p) {
        case Policy::none: return "none";
        case Policy::redispatch_full: return "redispatch-full";
        case Policy::redispatch_smart: return "redispatch-smart";
    }
    return "none";
}

Policy policy_from_name(const std::string& name) {
    if (name == "none") return Policy::none;
    if (name == "redispatch-full") return Policy::redispatch_full;
    if (name == "redispatch-smart") return Policy::redispatch_smart;
    throw std::invalid_argument("unknown policy: " + name);
}

int CascadeSample::failure_step(int branch) const {
    for (std::size_t t = 0; t < states.size(); ++t)
        if (!states[t][branch]) return static_cast<int>(t) + 1;
    return 0;
}

void CascadeSample::validate() const {
    if (states.empty()) throw std::invalid_argument("sample has no states");
    if (termination_time != static_cast<int>(states.size()))
        throw std::invalid_argument("termination_time does not match state count");
    if (load_served.size() + 1 != states.size() || shed_mw.size() != load_served.size())
        throw std::invalid_argument("load_served/shed_mw must have T-1 entries");
    if (initial_failures.size() != 2 || initial_failures[0] == initial_failures[1])
        throw std::invalid_argument("initial failures must be two distinct branches");
    const std::size_t m = states[0].size();
    for (std::size_t t = 0; t + 1 < states.size(); ++t) {
        if (states[t + 1].size() != m) throw std::invalid_argument("ragged state vectors");
        for (std::size_t b = 0; b < m; ++b)
            if (states[t + 1][b] > states[t][b])
                throw std::invalid_argument("branch revived at step " + std::to_string(t + 2));
    }
    for (int b : initial_failures)
        if (b < 0 || b >= static_cast<int>(m) || states[0][b])
            throw std::invalid_argument("initial failure not dead in s[1]");
    for (std::size_t t = 0; t < load_served.size(); ++t) {
        if (load_served[t].size() != shed_mw[t].size())
            throw std::invalid_argument("ragged service vectors");
        for (std::size_t i = 0; i < load_served[t].size(); ++i) {
            const bool served = load_served[t][i] != 0;
            if (served != (shed_mw[t][i] == 0.0))
                throw std::invalid_argument("load_served inconsistent with shed_mw");
            if (shed_mw[t][i] < 0) throw std::invalid_argument("negative shed");
        }
    }
}

int SamplePool::n_branches() const {
    return samples.empty() ? 0 : static_cast<int>(samples[0].states[0].size());
}

int SamplePool::n_buses() const {
    for (const auto& s : samples)
        if (!s.load_served.empty()) return static_cast<int>(s.load_served[0].size());
    return 0;
}

namespace {
std::vector<const CascadeSample*> pick(const std::vector<CascadeSample>& samples,
                                       const std::vector<int64_t>& ids) {
    std::vector<const CascadeSample*> out;
    out.reserve(ids.size());
    for (int64_t id : ids)
        for (const auto& s : samples)
            if (s.sample_id == id) {
                out.push_back(&s);
                break;
            }
    return out;
}
}  // namespace

std::vector<const CascadeSample*> SamplePool::training_samples() const {
    return pick(samples, train_ids);
}

std::vector<const CascadeSample*> SamplePool::test_samples() const {
    return pick(samples, test_ids);
}

void SamplePool::split(double train_fraction) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw std::invalid_argument("train fraction must be in (0,1)");
    train_ids.clear();
    test_ids.clear();
    const auto n = samples.size();
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * n));
    for (std::size_t i = 0; i < n; ++i)
        (i < n_train ? train_ids : test_ids).push_back(samples[i].sample_id);
}

namespace {

json binary_seq_to_json(const std::vector<std::vector<uint8_t>>& seq) {
    json out = json::array();
    for (const auto& v : seq) {
        json row = json::array();
        for (uint8_t x : v) row.push_back(static_cast<int>(x));
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<std::vector<uint8_t>> binary_seq_from_json(const json& j) {
    std::vector<std::vector<uint8_t>> out;
    for (const auto& row : j) {
        std::vector<uint8_t> v;
        v.reserve(row.size());
        for (const auto& x : row) v.push_back(static_cast<uint8_t>(x.get<int>() ? 1 : 0));
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

std::string sample_to_json(const CascadeSample& s) {
    json j;
    j["sample_id"] = s.sample_id;
    j["loading_c"] = s.loading_c;
    json fails = json::array();
    for (int b : s.initial_failures) fails.push_back(b + 1);
    j["initial_failures"] = std::move(fails);
    j["states"] = binary_seq_to_json(s.states);
    j["load_served"] = binary_seq_to_json(s.load_served);
    j["shed_mw"] = s.shed_mw;
    j["termination_time"] = s.termination_time;
    j["policy"] = policy_name(s.policy);
    return j.dump();
}

CascadeSample sample_from_json(const std::string& line) {
    const json j = json::parse(line);
    CascadeSample s;
    s.sample_id = j.at("sample_id").get<int64_t>();
    s.loading_c = j.at("loading_c").get<double>();
    for (const auto& b : j.at("initial_failures")) s.initial_failures.push_back(b.get<int>() - 1);
    s.states = binary_seq_from_json(j.at("states"));
    s.load_served = binary_seq_from_json(j.at("load_served"));
    s.shed_mw = j.at("shed_mw").get<std::vector<std::vector<double>>>();
    s.termination_time = j.at("termination_time").get<int>();
    s.policy = policy_from_name(j.at("policy").get<std::string>());
    s.validate();
    return s;
}

void save_pool(const SamplePool& pool, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write pool file: " + path);
    for (const auto& s : pool.samples) out << sample_to_json(s) << '\n';
}

SamplePool load_pool(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open pool file: " + path);
    SamplePool pool;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        pool.samples.push_back(sample_from_json(line));
    }
    // Default split; callers with a manifest overwrite this.
    if (pool.samples.size() >= 2) pool.split(0.9);
    return pool;
}

std::string manifest_path_for(const std::string& pool_path) {
    return pool_path + ".manifest.json";
}

std::string PoolManifest::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["case_hash"] = case_hash;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["policy"] = policy_name(policy);
    j["loading_c"] = loading_c;
    j["n_samples"] = n_samples;
    j["split_fraction"] = split_fraction;
    j["train_ids"] = train_ids;
    j["test_ids"] = test_ids;
    j["summary"] = {{"frac_t1", frac_t1}, {"mean_t", mean_t}};
    return j.dump(2) + "\n";
}

PoolManifest PoolManifest::from_json(const std::string& text) {
    const json j = json::parse(text);
    PoolManifest m;
    m.schema_version = j.value("schema_version", 1);
    m.case_hash = j.at("case_hash").get<std::string>();
    m.config_hash = j.value("config_hash", "");
    m.seed = j.at("seed").get<uint64_t>();
    m.policy = policy_from_name(j.at("policy").get<std::string>());
    m.loading_c = j.at("loading_c").get<double>();
    m.n_samples = j.at("n_samples").get<int>();
    m.split_fraction = j.value("split_fraction", 0.9);
    m.train_ids = j.at("train_ids").get<std::vector<int64_t>>();
    m.test_ids = j.at("test_ids").get<std::vector<int64_t>>();
    if (j.contains("summary")) {
        m.frac_t1 = j["summary"].value("frac_t1", 0.0);
        m.mean_t = j["summary"].value("mean_t", 0.0);
    }
    return m;
}

}  // namespace gridcast
