#include "tsrules/trajectory.hpp"

#include <sstream>

#include "tsrules/error.hpp"

namespace tsrules {

nlohmann::json to_json(const TrajectoryEntry& e) {
    nlohmann::json j = {
        {"iteration", e.iteration},
        {"epoch", e.epoch},
        {"rule_text", e.rule_text},
        {"report", to_json(e.report)},
        {"behavior", to_string(e.behavior)},
        {"modification_note", e.modification_note},
        {"proposed_rule", nullptr},
        {"proposed_report", nullptr},
        {"failure", nullptr},
        {"improved_best", e.improved_best},
        {"improved_current", e.improved_current},
    };
    if (e.proposed_rule) j["proposed_rule"] = *e.proposed_rule;
    if (e.proposed_report) j["proposed_report"] = to_json(*e.proposed_report);
    if (e.failure) j["failure"] = *e.failure;
    return j;
}

TrajectoryEntry trajectory_entry_from_json(const nlohmann::json& j) {
    try {
        TrajectoryEntry e;
        e.iteration = j.at("iteration").get<std::size_t>();
        e.epoch = j.value("epoch", std::size_t{0});
        e.rule_text = j.at("rule_text").get<std::string>();
        e.report = eval_report_from_json(j.at("report"));
        const auto b = parse_behavior(j.at("behavior").get<std::string>());
        if (!b) throw Error(ErrorCode::MalformedRecord, "unknown behavior in trajectory entry");
        e.behavior = *b;
        e.modification_note = j.value("modification_note", std::string{});
        if (const auto it = j.find("proposed_rule"); it != j.end() && it->is_string()) {
            e.proposed_rule = it->get<std::string>();
        }
        if (const auto it = j.find("proposed_report"); it != j.end() && it->is_object()) {
            e.proposed_report = eval_report_from_json(*it);
        }
        if (const auto it = j.find("failure"); it != j.end() && it->is_string()) {
            e.failure = it->get<std::string>();
        }
        e.improved_best = j.value("improved_best", false);
        e.improved_current = j.value("improved_current", false);
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::MalformedRecord, std::string("trajectory entry: ") + ex.what());
    }
}

std::string dump_trajectory(const Trajectory& t) {
    std::string out;
    for (const auto& e : t) {
        out += to_json(e).dump();
        out += '\n';
    }
    return out;
}

Trajectory parse_trajectory(std::string_view jsonl) {
    Trajectory t;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            t.push_back(trajectory_entry_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& ex) {
            throw Error(ErrorCode::MalformedRecord, std::string("trajectory line: ") + ex.what());
        }
    }
    return t;
}

}  // namespace tsrules
