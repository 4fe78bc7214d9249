#include "gridcast/case_io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "gridcast/log.hpp"
#include "json.hpp"

namespace gridcast {

using nlohmann::json;

CaseDialect dialect_from_name(const std::string& name) {
    if (name == "native-json") return CaseDialect::native_json;
    if (name == "matpower-m") return CaseDialect::matpower_m;
    throw std::invalid_argument("unknown case dialect: " + name);
}

std::string dialect_name(CaseDialect d) {
    return d == CaseDialect::native_json ? "native-json" : "matpower-m";
}

CaseDialect dialect_from_path(const std::string& path) {
    if (path.size() >= 2 && path.substr(path.size() - 2) == ".m") return CaseDialect::matpower_m;
    return CaseDialect::native_json;
}

namespace {

void line_col_of_offset(const std::string& text, std::size_t offset, int& line, int& col) {
    line = 1;
    col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
}

int require_int(const json& v, const char* what) {
    if (!v.is_number()) throw ParseError(std::string("expected integer for ") + what, 0, 0);
    return v.get<int>();
}

Network parse_native_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        int line = 0, col = 0;
        line_col_of_offset(text, e.byte > 0 ? e.byte - 1 : 0, line, col);
        throw ParseError(std::string("JSON syntax error: ") + e.what(), line, col);
    }

    Network net;
    net.base_mva = doc.value("base_mva", 100.0);

    std::unordered_set<int> seen;
    for (const auto& b : doc.at("buses")) {
        Bus bus;
        const int ext = require_int(b.at("id"), "bus id");
        if (!seen.insert(ext).second) throw ParseError("duplicate bus id " + std::to_string(ext), 0, 0);
        bus.id = ext - 1;
        bus.load_p = b.value("load_p", 0.0);
        bus.shed_priority = b.value("shed_priority", 1.0);
        bus.is_slack = b.value("is_slack", false);
        net.buses.push_back(bus);
    }
    const int n = net.n_buses();
    // Buses must arrive as 1..N in order for ids to be dense internally.
    for (int i = 0; i < n; ++i)
        if (net.buses[i].id != i) throw ParseError("bus ids must be dense 1..N in order", 0, 0);

    seen.clear();
    for (const auto& b : doc.at("branches")) {
        Branch br;
        const int ext = require_int(b.at("id"), "branch id");
        if (!seen.insert(ext).second)
            throw ParseError("duplicate branch id " + std::to_string(ext), 0, 0);
        br.id = ext - 1;
        br.from_bus = require_int(b.at("from_bus"), "from_bus") - 1;
        br.to_bus = require_int(b.at("to_bus"), "to_bus") - 1;
        br.reactance = b.at("reactance").get<double>();
        br.rating_long = b.at("rating_long").get<double>();
        br.cost_weight = b.value("cost_weight", br.rating_long);
        net.branches.push_back(br);
    }
    seen.clear();
    if (doc.contains("generators")) {
        for (const auto& g : doc.at("generators")) {
            Generator gen;
            const int ext = require_int(g.at("id"), "generator id");
            if (!seen.insert(ext).second)
                throw ParseError("duplicate generator id " + std::to_string(ext), 0, 0);
            gen.id = ext - 1;
            gen.bus = require_int(g.at("bus"), "generator bus") - 1;
            gen.p_max = g.at("p_max").get<double>();
            gen.p_min = g.value("p_min", 0.0);
            gen.cost = g.value("cost", 1.0);
            net.generators.push_back(gen);
        }
    }
    return net;
}

// Minimal MATPOWER .m reader: the bus/gen/branch/gencost tables and
// baseMVA. Anything else in the file is skipped.
struct MRow {
    std::vector<double> values;
    int line = 0;
};

class MScanner {
public:
    explicit MScanner(const std::string& text) : text_(text) {}

    bool find_matrix(const std::string& name, std::vector<MRow>& rows) {
        const std::string key = "mpc." + name;
        std::size_t pos = text_.find(key);
        while (pos != std::string::npos) {
            std::size_t eq = text_.find('=', pos + key.size());
            if (eq == std::string::npos) return false;
            std::size_t open = text_.find('[', eq);
            if (open == std::string::npos) return false;
            return parse_rows(open + 1, rows);
        }
        return false;
    }

    bool find_scalar(const std::string& name, double& out) {
        const std::string key = "mpc." + name;
        std::size_t pos = text_.find(key);
        if (pos == std::string::npos) return false;
        std::size_t eq = text_.find('=', pos + key.size());
        if (eq == std::string::npos) return false;
        std::size_t end = text_.find(';', eq);
        std::string token = text_.substr(eq + 1, end - eq - 1);
        try {
            out = std::stod(token);
        } catch (...) {
            throw_at(eq, "malformed scalar " + name);
        }
        return true;
    }

private:
    [[noreturn]] void throw_at(std::size_t offset, const std::string& msg) {
        int line = 0, col = 0;
        line_col_of_offset(text_, offset, line, col);
        throw ParseError(msg, line, col);
    }

    bool parse_rows(std::size_t pos, std::vector<MRow>& rows) {
        MRow row;
        std::size_t i = pos;
        while (i < text_.size()) {
            const char c = text_[i];
            if (c == ']') {
                if (!row.values.empty()) rows.push_back(row);
                return true;
            }
            if (c == '%') {  // comment to end of line
                while (i < text_.size() && text_[i] != '\n') ++i;
                continue;
            }
            if (c == ';' || c == '\n') {
                if (!row.values.empty()) rows.push_back(row);
                row.values.clear();
                ++i;
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
                ++i;
                continue;
            }
            std::size_t end = i;
            while (end < text_.size() && !std::isspace(static_cast<unsigned char>(text_[end])) &&
                   text_[end] != ';' && text_[end] != ',' && text_[end] != ']' && text_[end] != '%')
                ++end;
            const std::string token = text_.substr(i, end - i);
            try {
                std::size_t used = 0;
                const double v = std::stod(token, &used);
                if (used != token.size()) throw std::invalid_argument(token);
                if (row.values.empty()) {
                    int line = 0, col = 0;
                    line_col_of_offset(text_, i, line, col);
                    row.line = line;
                }
                row.values.push_back(v);
            } catch (...) {
                throw_at(i, "malformed number '" + token + "'");
            }
            i = end;
        }
        throw_at(pos, "unterminated matrix literal");
    }

    const std::string& text_;
};

Network parse_matpower(const std::string& text) {
    MScanner scan(text);
    Network net;
    double base = 100.0;
    if (scan.find_scalar("baseMVA", base)) net.base_mva = base;

    std::vector<MRow> bus_rows, gen_rows, branch_rows, cost_rows;
    if (!scan.find_matrix("bus", bus_rows)) throw ParseError("missing mpc.bus table", 0, 0);
    if (!scan.find_matrix("branch", branch_rows)) throw ParseError("missing mpc.branch table", 0, 0);
    scan.find_matrix("gen", gen_rows);
    scan.find_matrix("gencost", cost_rows);

    std::unordered_set<int> seen;
    for (const auto& row : bus_rows) {
        if (row.values.size() < 3)
            throw ParseError("bus row needs at least bus_i, type, Pd", row.line, 1);
        if (row.values.size() > 13)
            log_warn("case parser: ignoring %zu unknown bus columns (line %d)", row.values.size() - 13,
                     row.line);
        Bus bus;
        const int ext = static_cast<int>(row.values[0]);
        if (!seen.insert(ext).second)
            throw ParseError("duplicate bus id " + std::to_string(ext), row.line, 1);
        bus.id = ext - 1;
        bus.is_slack = static_cast<int>(row.values[1]) == 3;
        bus.load_p = row.values[2];
        net.buses.push_back(bus);
    }
    for (int i = 0; i < net.n_buses(); ++i)
        if (net.buses[i].id != i) throw ParseError("bus ids must be dense 1..N in order", 0, 0);

    int branch_id = 0;
    for (const auto& row : branch_rows) {
        if (row.values.size() < 6)
            throw ParseError("branch row needs fbus, tbus, r, x, b, rateA", row.line, 1);
        if (row.values.size() > 13)
            log_warn("case parser: ignoring %zu unknown branch columns (line %d)",
                     row.values.size() - 13, row.line);
        Branch br;
        br.id = branch_id++;
        br.from_bus = static_cast<int>(row.values[0]) - 1;
        br.to_bus = static_cast<int>(row.values[1]) - 1;
        br.reactance = row.values[3];
        br.rating_long = row.values[5];
        br.cost_weight = br.rating_long;
        if (br.reactance <= 0)
            throw ParseError("branch " + std::to_string(br.id + 1) + " has nonpositive reactance",
                             row.line, 1);
        net.branches.push_back(br);
    }
    int gen_id = 0;
    for (const auto& row : gen_rows) {
        if (row.values.size() < 10)
            throw ParseError("gen row needs 10 leading columns", row.line, 1);
        Generator g;
        g.id = gen_id++;
        g.bus = static_cast<int>(row.values[0]) - 1;
        g.p_max = row.values[8];
        g.p_min = row.values[9];
        g.cost = 1.0;
        net.generators.push_back(g);
    }
    // Linear cost coefficient from polynomial gencost rows (model 2):
    // [model startup shutdown n cN ... c1 c0] -> coefficient of the linear term.
    for (std::size_t i = 0; i < cost_rows.size() && i < net.generators.size(); ++i) {
        const auto& v = cost_rows[i].values;
        if (v.size() >= 4 && static_cast<int>(v[0]) == 2) {
            const int ncost = static_cast<int>(v[3]);
            const std::size_t linear_idx = 4 + ncost - 2;
            if (ncost >= 2 && v.size() > linear_idx) net.generators[i].cost = v[linear_idx];
        }
    }
    return net;
}

}  // namespace

Network parse_case(const std::string& text, CaseDialect dialect) {
    Network net = dialect == CaseDialect::native_json ? parse_native_json(text)
                                                      : parse_matpower(text);
    net.validate();
    return net;
}

Network load_case_file(const std::string& path) {
    return load_case_file(path, dialect_from_path(path));
}

Network load_case_file(const std::string& path, CaseDialect dialect) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open case file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_case(buf.str(), dialect);
}

std::string serialize_case(const Network& net) {
    json doc;
    doc["base_mva"] = net.base_mva;
    json buses = json::array();
    for (const auto& b : net.buses) {
        buses.push_back({{"id", b.id + 1},
                         {"load_p", b.load_p},
                         {"shed_priority", b.shed_priority},
                         {"is_slack", b.is_slack}});
    }
    doc["buses"] = std::move(buses);
    json branches = json::array();
    for (const auto& b : net.branches) {
        branches.push_back({{"id", b.id + 1},
                            {"from_bus", b.from_bus + 1},
                            {"to_bus", b.to_bus + 1},
                            {"reactance", b.reactance},
                            {"rating_long", b.rating_long},
                            {"cost_weight", b.cost_weight}});
    }
    doc["branches"] = std::move(branches);
    json gens = json::array();
    for (const auto& g : net.generators) {
        gens.push_back({{"id", g.id + 1},
                        {"bus", g.bus + 1},
                        {"p_max", g.p_max},
                        {"p_min", g.p_min},
                        {"cost", g.cost}});
    }
    doc["generators"] = std::move(gens);
    return doc.dump(2) + "\n";
}

void save_case_file(const Network& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write case file: " + path);
    out << serialize_case(net);
}

uint64_t fnv1a(const std::string& bytes) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

uint64_t case_hash(const Network& net) { return fnv1a(serialize_case(net)); }

std::string case_hash_hex(const Network& net) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(case_hash(net)));
    return buf;
}

}  // namespace gridcast
