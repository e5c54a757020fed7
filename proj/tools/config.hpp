#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsrules/features.hpp"
#include "tsrules/labeling.hpp"
#include "tsrules/llm/backend.hpp"
#include "tsrules/refine.hpp"
#include "tsrules/synth.hpp"

namespace tsrules::cli {

// Layered settings: built-in defaults, then the TOML file, then flags. Held as
// one JSON tree with a section per module:
//   [synth] [features] [labeling] [backend] [[backends]] [refine] [refine.behavior]
class Settings {
public:
    Settings() = default;
    // Throws Error(Io) when unreadable, Error(InvalidConfig) on TOML syntax
    // errors, unknown sections or unknown keys.
    static Settings from_toml_file(const std::filesystem::path& path);
    static Settings from_toml(std::string_view text, const std::string& source = "config");

    // Flag overrides; a disengaged optional leaves the file value in place.
    template <class T>
    void set(const std::string& section, const std::string& key, const std::optional<T>& value) {
        if (value) tree_[section][key] = *value;
    }

    SynthConfig synth() const;
    FeatureConfig features() const;
    ConsensusConfig consensus() const;
    // [backend]; the scripted default when absent.
    llm::BackendConfig backend() const;
    // [[backends]] for the labeling panel; falls back to [backend].
    std::vector<llm::BackendConfig> panel() const;
    RefinementConfig refinement() const;

    const nlohmann::json& tree() const noexcept { return tree_; }

private:
    nlohmann::json tree_ = nlohmann::json::object();

    nlohmann::json section(const std::string& name) const;
};

// Stable hex digest of a JSON value's compact dump.
std::string config_hash(const nlohmann::json& j);

}  // namespace tsrules::cli
