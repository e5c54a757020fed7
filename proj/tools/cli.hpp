#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tsrules::cli {

struct RunManifest {
    std::string command;
    std::string tool_version;
    std::string config_hash;
    nlohmann::json config = nlohmann::json::object();  // resolved settings that affect outputs
    std::vector<std::uint64_t> seeds;
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> outputs;
    std::string started_at;
    std::string finished_at;
    double elapsed_ms = 0.0;
    bool ok = true;
    std::optional<std::string> error_code;
    std::optional<std::string> error_message;
};

nlohmann::json to_json(const RunManifest& m);

// Parses argv and runs one subcommand. Exit code 0 on success, 1 on a typed
// domain error, 2 on a usage error. The manifest is written after success or
// a domain error, not after usage errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tsrules::cli
