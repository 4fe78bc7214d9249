#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "gridcast/influence.hpp"
#include "gridcast/network.hpp"
#include "gridcast/sample.hpp"

namespace httplib {
class Server;
}

namespace gridcast::advisory {

// Read-mostly artifact store over a directory of the CLI's file formats.
// Loads at startup and lazily on first reference; loaded entries are
// immutable snapshots, so requests in flight never observe partial loads.
class Store {
public:
    explicit Store(std::string dir);

    struct CaseEntry {
        std::string id;
        std::string hash;
        std::shared_ptr<const Network> net;
    };
    struct ModelEntry {
        std::string id;
        std::string file_hash;
        std::shared_ptr<const InfluenceModel> model;
    };
    struct PoolEntry {
        std::string id;
        std::shared_ptr<const SamplePool> pool;
    };

    std::vector<CaseEntry> cases() const;
    std::vector<ModelEntry> models() const;
    std::shared_ptr<const Network> find_case(const std::string& id) const;
    std::shared_ptr<const InfluenceModel> find_model(const std::string& id) const;
    std::shared_ptr<const SamplePool> find_pool(const std::string& id) const;
    std::string model_file_hash(const std::string& id) const;

    // Model matching a case hash, policy and loading level exactly.
    std::shared_ptr<const InfluenceModel> match_model(const std::string& case_hash, Policy policy,
                                                      double loading) const;

private:
    void scan();
    bool try_load(const std::string& id) const;

    std::string dir_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, CaseEntry> cases_;
    mutable std::map<std::string, ModelEntry> models_;
    mutable std::map<std::string, PoolEntry> pools_;
};

struct AdviseStrategyResult {
    Policy strategy = Policy::none;
    bool available = false;
    std::string flag;  // reason when unavailable
    double link_fail_loss = 0.0;
    double load_shed_loss = 0.0;
    double composite = 0.0;
    int rank = 0;
    std::string body_json;  // predicted_cascade / predicted_sheds fragment
};

// Registers every route (cases, models, predict, advise, criticality,
// CORS preflight and optional static UI assets) on the given server.
void register_routes(httplib::Server& server, std::shared_ptr<Store> store,
                     const std::string& ui_dir);

}  // namespace gridcast::advisory
