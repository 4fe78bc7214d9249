#include "gridcast/influence.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gridcast {

using nlohmann::json;

std::vector<double> link_step_probs(const InfluenceModelD& m, const std::vector<uint8_t>& state) {
    const int n = m.n_links();
    if (static_cast<int>(state.size()) != n)
        throw std::invalid_argument("link_step_probs: state size mismatch");
    std::vector<double> probs(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            const double p = state[j] ? m.a11(j, i) : m.a01(j, i);
            acc += m.d(i, j) * p;
        }
        probs[i] = acc;
    }
    return probs;
}

std::vector<double> shed_step_probs(const InfluenceModelE& m, const std::vector<uint8_t>& state) {
    const int nb = m.n_buses();
    const int nl = m.n_links();
    if (static_cast<int>(state.size()) != nl)
        throw std::invalid_argument("shed_step_probs: state size mismatch");
    std::vector<double> probs(nb, 0.0);
    for (int i = 0; i < nb; ++i) {
        double acc = 0.0;
        for (int j = 0; j < nl; ++j) {
            const double p = state[j] ? m.b11(j, i) : m.b01(j, i);
            acc += m.e(i, j) * p;
        }
        probs[i] = acc;
    }
    return probs;
}

namespace {

// kill row (j, entity) = weight(entity, j) * (alive_prob - dead_prob).
Matrix build_kill_rows(const Matrix& weights, const Matrix& alive, const Matrix& dead) {
    Matrix rows(alive.rows(), alive.cols());
    for (std::size_t j = 0; j < alive.rows(); ++j)
        for (std::size_t i = 0; i < alive.cols(); ++i)
            rows(j, i) = weights(i, j) * (alive(j, i) - dead(j, i));
    return rows;
}

}  // namespace

void InfluenceModelD::rebuild_cache() {
    kill_delta = build_kill_rows(d, a11, a01);
    all_alive_probs = link_step_probs(*this, std::vector<uint8_t>(n_links(), 1));
    threshold_index = build_threshold_index(threshold_pool);
}

void InfluenceModelE::rebuild_cache() {
    kill_delta = build_kill_rows(e, b11, b01);
    all_alive_probs = shed_step_probs(*this, std::vector<uint8_t>(n_links(), 1));
    threshold_index = build_threshold_index(threshold_pool);
}

ThresholdIndex build_threshold_index(const std::vector<ThresholdEntry>& pool) {
    ThresholdIndex index;
    index.loadings.reserve(pool.size());
    index.fail_offsets.reserve(pool.size() + 1);
    index.fail_offsets.push_back(0);
    index.uniform_pairs = !pool.empty();
    int max_branch = -1;
    for (const auto& e : pool) {
        index.loadings.push_back(e.loading_c);
        if (e.initial_failures.size() != 2) index.uniform_pairs = false;
        for (int b : e.initial_failures) {
            index.fail_ids.push_back(b);
            max_branch = std::max(max_branch, b);
        }
        index.fail_offsets.push_back(static_cast<int32_t>(index.fail_ids.size()));
    }
    if (index.uniform_pairs && max_branch >= 0) {
        std::vector<int32_t> counts(max_branch + 1, 0);
        for (int32_t b : index.fail_ids) ++counts[b];
        index.posting_offsets.assign(max_branch + 2, 0);
        for (int b = 0; b <= max_branch; ++b)
            index.posting_offsets[b + 1] = index.posting_offsets[b] + counts[b];
        index.posting_entries.assign(index.fail_ids.size(), 0);
        std::vector<int32_t> cursor(index.posting_offsets.begin(),
                                    index.posting_offsets.end() - 1);
        for (std::size_t k = 0; k < pool.size(); ++k)
            for (int32_t f = index.fail_offsets[k]; f < index.fail_offsets[k + 1]; ++f)
                index.posting_entries[cursor[index.fail_ids[f]]++] =
                    static_cast<int32_t>(k);

        index.single_level = true;
        for (double l : index.loadings)
            if (std::fabs(l - index.loadings.front()) >= 1e-9) index.single_level = false;
        index.width = pool.front().thresholds.size();
        for (const auto& e : pool)
            if (e.thresholds.size() != index.width) index.single_level = false;

        if (index.single_level && index.width > 0) {
            index.sorted_vals.assign(index.posting_entries.size() * index.width, 0.0);
            std::vector<double> buf;
            for (int b = 0; b <= max_branch; ++b) {
                const int32_t lo = index.posting_offsets[b];
                const int32_t hi = index.posting_offsets[b + 1];
                const int32_t count = hi - lo;
                if (count == 0) continue;
                double* base = index.sorted_vals.data() +
                               static_cast<std::size_t>(lo) * index.width;
                for (std::size_t i = 0; i < index.width; ++i) {
                    buf.clear();
                    for (int32_t f = lo; f < hi; ++f)
                        buf.push_back(pool[index.posting_entries[f]].thresholds[i]);
                    std::sort(buf.begin(), buf.end());
                    std::copy(buf.begin(), buf.end(), base + i * count);
                }
            }
            const int64_t n_key = max_branch + 1;
            for (std::size_t k = 0; k < pool.size(); ++k) {
                const auto& fails = pool[k].initial_failures;
                index.pair_entries.push_back(
                    {static_cast<int64_t>(fails[0]) * n_key + fails[1],
                     static_cast<int32_t>(k)});
            }
            std::sort(index.pair_entries.begin(), index.pair_entries.end());
        }
    }
    return index;
}

void StepChain::kill(int link) {
    const Matrix& rows = kill_rows();
    const std::size_t width = rows.cols();
    const double* row = rows.data().data() + static_cast<std::size_t>(link) * width;
    for (std::size_t i = 0; i < width; ++i) probs_[i] -= row[i];
    state_[link] = 0;
}

void StepChain::advance(const std::vector<uint8_t>& next) {
    if (next.size() != state_.size()) throw std::invalid_argument("StepChain: state size mismatch");
    for (std::size_t j = 0; j < next.size(); ++j) {
        if (next[j] && !state_[j])
            throw std::invalid_argument("StepChain: state sequence is not monotone");
        if (!next[j] && state_[j]) kill(static_cast<int>(j));
    }
}

StepChain link_chain(const InfluenceModelD& m, const std::vector<uint8_t>& initial) {
    StepChain chain;
    chain.state_.assign(initial.size(), 1);
    if (m.has_cache()) {
        chain.shared_kill_rows_ = &m.kill_delta;
        chain.probs_ = m.all_alive_probs;
        for (std::size_t j = 0; j < initial.size(); ++j)
            if (!initial[j]) chain.kill(static_cast<int>(j));
    } else {
        chain.owned_kill_rows_ = build_kill_rows(m.d, m.a11, m.a01);
        chain.probs_ = link_step_probs(m, initial);
        chain.state_ = initial;
    }
    return chain;
}

StepChain shed_chain(const InfluenceModelE& m, const std::vector<uint8_t>& initial) {
    StepChain chain;
    chain.state_.assign(initial.size(), 1);
    if (m.has_cache()) {
        chain.shared_kill_rows_ = &m.kill_delta;
        chain.probs_ = m.all_alive_probs;
        for (std::size_t j = 0; j < initial.size(); ++j)
            if (!initial[j]) chain.kill(static_cast<int>(j));
    } else {
        chain.owned_kill_rows_ = build_kill_rows(m.e, m.b11, m.b01);
        chain.probs_ = shed_step_probs(m, initial);
        chain.state_ = initial;
    }
    return chain;
}

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    const std::size_t rows = j.size();
    const std::size_t cols = rows ? j[0].size() : 0;
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    return m;
}

json pool_to_json(const std::vector<ThresholdEntry>& pool) {
    json out = json::array();
    for (const auto& e : pool) {
        json fails = json::array();
        for (int b : e.initial_failures) fails.push_back(b + 1);
        out.push_back({{"loading_c", e.loading_c},
                       {"initial_failures", std::move(fails)},
                       {"thresholds", e.thresholds}});
    }
    return out;
}

std::vector<ThresholdEntry> pool_from_json(const json& j) {
    std::vector<ThresholdEntry> out;
    for (const auto& e : j) {
        ThresholdEntry t;
        t.loading_c = e.at("loading_c").get<double>();
        for (const auto& b : e.at("initial_failures")) t.initial_failures.push_back(b.get<int>() - 1);
        t.thresholds = e.at("thresholds").get<std::vector<double>>();
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

std::string model_to_json(const InfluenceModel& m) {
    json j;
    j["schema_version"] = m.schema_version;
    j["case_hash"] = m.case_hash;
    j["config_hash"] = m.config_hash;
    j["pool_hash"] = m.pool_hash;
    j["seed"] = m.seed;
    j["policy"] = policy_name(m.policy);
    j["loading_c"] = m.loading_c;
    j["alpha_d"] = m.link_model.alpha;
    j["alpha_e"] = m.shed_model.alpha;
    j["fit_converged_d"] = m.link_model.fit_converged;
    j["fit_converged_e"] = m.shed_model.fit_converged;
    j["a11"] = matrix_to_json(m.link_model.a11);
    j["a01"] = matrix_to_json(m.link_model.a01);
    j["d"] = matrix_to_json(m.link_model.d);
    j["b11"] = matrix_to_json(m.shed_model.b11);
    j["b01"] = matrix_to_json(m.shed_model.b01);
    j["e"] = matrix_to_json(m.shed_model.e);
    j["threshold_pool_d"] = pool_to_json(m.link_model.threshold_pool);
    j["threshold_pool_e"] = pool_to_json(m.shed_model.threshold_pool);
    return j.dump(2) + "\n";
}

InfluenceModel model_from_json(const std::string& text) {
    const json j = json::parse(text);
    InfluenceModel m;
    m.schema_version = j.value("schema_version", 1);
    if (m.schema_version != 1)
        throw std::runtime_error("unsupported model schema version " +
                                 std::to_string(m.schema_version));
    m.case_hash = j.at("case_hash").get<std::string>();
    m.config_hash = j.value("config_hash", "");
    m.pool_hash = j.value("pool_hash", "");
    m.seed = j.value("seed", static_cast<uint64_t>(0));
    m.policy = policy_from_name(j.at("policy").get<std::string>());
    m.loading_c = j.at("loading_c").get<double>();
    m.link_model.alpha = j.value("alpha_d", 0.9);
    m.shed_model.alpha = j.value("alpha_e", 0.9);
    m.link_model.fit_converged = j.value("fit_converged_d", true);
    m.shed_model.fit_converged = j.value("fit_converged_e", true);
    m.link_model.a11 = matrix_from_json(j.at("a11"));
    m.link_model.a01 = matrix_from_json(j.at("a01"));
    m.link_model.d = matrix_from_json(j.at("d"));
    m.shed_model.b11 = matrix_from_json(j.at("b11"));
    m.shed_model.b01 = matrix_from_json(j.at("b01"));
    m.shed_model.e = matrix_from_json(j.at("e"));
    m.link_model.threshold_pool = pool_from_json(j.at("threshold_pool_d"));
    m.shed_model.threshold_pool = pool_from_json(j.at("threshold_pool_e"));
    m.link_model.rebuild_cache();
    m.shed_model.rebuild_cache();
    return m;
}

void save_model(const InfluenceModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << model_to_json(m);
}

InfluenceModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace gridcast
