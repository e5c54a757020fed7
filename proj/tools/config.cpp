#include "config.hpp"

#include <map>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "tsrules/error.hpp"
#include "tsrules/io.hpp"
#include "tsrules/rng.hpp"

namespace tsrules::cli {

namespace {

nlohmann::json to_json(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        auto j = nlohmann::json::object();
        for (const auto& [k, v] : *t) j[std::string(k.str())] = to_json(v);
        return j;
    }
    if (const auto* a = node.as_array()) {
        auto j = nlohmann::json::array();
        for (const auto& v : *a) j.push_back(to_json(v));
        return j;
    }
    if (const auto* v = node.as_string()) return v->get();
    if (const auto* v = node.as_integer()) return v->get();
    if (const auto* v = node.as_floating_point()) return v->get();
    if (const auto* v = node.as_boolean()) return v->get();
    // Dates and times are kept as text.
    std::ostringstream s;
    node.visit([&](const auto& v) { s << v; });
    return s.str();
}

const std::set<std::string> kBackendKeys = {"kind",        "name",          "endpoint",   "model_id",
                                            "temperature", "max_retries",   "timeout_ms", "backoff_ms",
                                            "api_key_env", "max_in_flight", "seed",       "label_noise",
                                            "top_features", "top_phrases"};

const std::map<std::string, std::set<std::string>> kSections = {
    {"synth", {"n_series", "series_length", "anomaly_rate", "archetype_weights", "noise_std", "seed"}},
    {"features", {"window", "epsilon", "sentinel"}},
    {"labeling", {"trials_per_model", "prefilter", "context_prompt"}},
    {"backend", kBackendKeys},
    {"refine",
     {"max_iterations", "target_f1", "patience", "epoch_gap_threshold", "max_epochs", "epoch_patience",
      "num_starts", "split", "seed", "behavior"}},
};

void check_keys(const nlohmann::json& table, const std::set<std::string>& allowed, const std::string& where) {
    if (!table.is_object()) throw Error(ErrorCode::InvalidConfig, where + " must be a table");
    for (const auto& [k, v] : table.items()) {
        if (!allowed.count(k)) throw Error(ErrorCode::InvalidConfig, "unknown key '" + k + "' in " + where);
    }
}

}  // namespace

Settings Settings::from_toml(std::string_view text, const std::string& source) {
    toml::table parsed;
    try {
        parsed = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
            << e.description();
        throw Error(ErrorCode::InvalidConfig, msg.str());
    }
    Settings s;
    s.tree_ = to_json(parsed);
    for (const auto& [name, value] : s.tree_.items()) {
        if (name == "backends") {
            if (!value.is_array()) throw Error(ErrorCode::InvalidConfig, "backends must be an array of tables");
            for (const auto& b : value) check_keys(b, kBackendKeys, "[[backends]]");
            continue;
        }
        const auto it = kSections.find(name);
        if (it == kSections.end()) throw Error(ErrorCode::InvalidConfig, "unknown section [" + name + "]");
        check_keys(value, it->second, "[" + name + "]");
    }
    if (s.tree_.contains("refine") && s.tree_["refine"].contains("behavior")) {
        check_keys(s.tree_["refine"]["behavior"], {"max_failure_rate", "all_anomaly_rate", "all_normal_rate", "gap"},
                   "[refine.behavior]");
    }
    return s;
}

Settings Settings::from_toml_file(const std::filesystem::path& path) {
    return from_toml(read_file(path), path.string());
}

nlohmann::json Settings::section(const std::string& name) const {
    const auto it = tree_.find(name);
    return it == tree_.end() ? nlohmann::json::object() : *it;
}

SynthConfig Settings::synth() const { return synth_config_from_json(section("synth")); }

FeatureConfig Settings::features() const {
    try {
        return feature_config_from_json(section("features"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("[features]: ") + e.what());
    }
}

ConsensusConfig Settings::consensus() const {
    auto j = section("labeling");
    j["features"] = tsrules::to_json(features());
    auto c = consensus_config_from_json(j);
    validate(c);
    return c;
}

llm::BackendConfig Settings::backend() const { return llm::backend_config_from_json(section("backend")); }

std::vector<llm::BackendConfig> Settings::panel() const {
    if (!tree_.contains("backends")) return {backend()};
    std::vector<llm::BackendConfig> out;
    std::set<std::string> names;
    for (const auto& b : tree_["backends"]) {
        out.push_back(llm::backend_config_from_json(b));
        if (!names.insert(out.back().name).second) {
            throw Error(ErrorCode::InvalidConfig, "duplicate backend name '" + out.back().name + "'");
        }
    }
    if (out.empty()) throw Error(ErrorCode::InvalidConfig, "[[backends]] is empty");
    return out;
}

RefinementConfig Settings::refinement() const {
    auto j = section("refine");
    j["features"] = tsrules::to_json(features());
    auto c = refinement_config_from_json(j);
    validate(c);
    return c;
}

std::string config_hash(const nlohmann::json& j) { return to_hex(fnv1a(j.dump())); }

}  // namespace tsrules::cli
