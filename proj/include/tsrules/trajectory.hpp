#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsrules/evaluation.hpp"

namespace tsrules {

// One refinement iteration: the current rule with its metrics and behavior,
// then what was proposed from it and how that went.
struct TrajectoryEntry {
    std::size_t iteration = 0;  // 1-based, strictly increasing across epochs
    std::size_t epoch = 0;
    std::string rule_text;
    EvalReport report;
    Behavior behavior = Behavior::Balanced;
    std::string modification_note;
    std::optional<std::string> proposed_rule;
    std::optional<EvalReport> proposed_report;
    // Set when no parseable proposal came back.
    std::optional<std::string> failure;
    bool improved_best = false;
    bool improved_current = false;

    friend bool operator==(const TrajectoryEntry&, const TrajectoryEntry&) = default;
};

using Trajectory = std::vector<TrajectoryEntry>;

nlohmann::json to_json(const TrajectoryEntry& e);
TrajectoryEntry trajectory_entry_from_json(const nlohmann::json& j);

std::string dump_trajectory(const Trajectory& t);  // JSONL
Trajectory parse_trajectory(std::string_view jsonl);

}  // namespace tsrules
