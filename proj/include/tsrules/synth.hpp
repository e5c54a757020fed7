#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "tsrules/dataset.hpp"

namespace tsrules {

// Generating mechanisms of the synthetic corpus. The first four produce
// anomalies; the rest produce normal series. BenignSharpDecrease deviates
// strongly from its history but is labeled Normal.
enum class Archetype {
    SuddenSpike,
    SustainedElevation,
    RiseAfterZeros,
    EscalatingTrend,
    Stable,
    Volatile,
    BenignSharpDecrease,
};

inline constexpr std::array kAnomalyArchetypes = {
    Archetype::SuddenSpike, Archetype::SustainedElevation, Archetype::RiseAfterZeros,
    Archetype::EscalatingTrend};
inline constexpr std::array kNormalArchetypes = {
    Archetype::Stable, Archetype::Volatile, Archetype::BenignSharpDecrease};

std::string_view to_string(Archetype a) noexcept;
std::optional<Archetype> parse_archetype(std::string_view name) noexcept;
bool is_anomalous(Archetype a) noexcept;
// Reason text the generator attaches to samples of this archetype.
std::string_view archetype_reason(Archetype a) noexcept;

struct SynthConfig {
    std::size_t n_series = 1000;
    std::size_t series_length = 53;
    double anomaly_rate = 0.08;
    std::map<Archetype, double> archetype_weights = {
        {Archetype::SuddenSpike, 1.0},   {Archetype::SustainedElevation, 1.0},
        {Archetype::RiseAfterZeros, 1.0}, {Archetype::EscalatingTrend, 1.0},
        {Archetype::Stable, 5.0},        {Archetype::Volatile, 3.0},
        {Archetype::BenignSharpDecrease, 2.0},
    };
    double noise_std = 2.0;
    std::uint64_t seed = 42;
};

void validate(const SynthConfig& cfg);

// Pure function of cfg. Exactly round(n_series * anomaly_rate) samples are
// anomalous; each record carries meta {"archetype": name}.
Dataset synth_generate(const SynthConfig& cfg);

nlohmann::json to_json(const SynthConfig& cfg);
// Throws Error(InvalidConfig) on wrong types or unknown archetype names.
SynthConfig synth_config_from_json(const nlohmann::json& j);

}  // namespace tsrules
