#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "gridcast/network.hpp"

namespace gridcast {

enum class CaseDialect { native_json, matpower_m };

CaseDialect dialect_from_name(const std::string& name);       // "native-json" | "matpower-m"
std::string dialect_name(CaseDialect d);
CaseDialect dialect_from_path(const std::string& path);       // by extension

struct ParseError : std::runtime_error {
    ParseError(std::string msg, int line_, int column_)
        : std::runtime_error(std::move(msg)), line(line_), column(column_) {}
    int line = 0;
    int column = 0;
};

Network parse_case(const std::string& text, CaseDialect dialect);
Network load_case_file(const std::string& path);  // dialect from extension
Network load_case_file(const std::string& path, CaseDialect dialect);

// Canonical single-document JSON form; parse(serialize(net)) == net.
std::string serialize_case(const Network& net);
void save_case_file(const Network& net, const std::string& path);

// FNV-1a over the canonical serialization; artifacts embed this so the
// pipeline can refuse mixing artifacts from different cases.
uint64_t case_hash(const Network& net);
std::string case_hash_hex(const Network& net);

uint64_t fnv1a(const std::string& bytes);

}  // namespace gridcast
