#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsrules/dataset.hpp"
#include "tsrules/evaluation.hpp"
#include "tsrules/features.hpp"
#include "tsrules/llm/backend.hpp"
#include "tsrules/taxonomy.hpp"
#include "tsrules/trajectory.hpp"

namespace tsrules {

struct RefinementConfig {
    std::size_t max_iterations = 20;  // per epoch
    double target_f1 = 0.95;
    // Iterations without a best-F1 gain before an epoch's loop stops.
    std::size_t patience = 8;
    double epoch_gap_threshold = 0.05;
    std::size_t max_epochs = 3;
    // Epochs without an accepted validation gain before run_epochs stops.
    std::size_t epoch_patience = 2;
    std::size_t num_starts = 3;
    SplitFractions split{0.6, 0.2, 0.2};
    std::uint64_t seed = 0;
    FeatureConfig features;
    BehaviorThresholds behavior;
    unsigned jobs = 1;
};

// Throws Error(InvalidConfig | InvalidFractions).
void validate(const RefinementConfig& cfg);
nlohmann::json to_json(const RefinementConfig& cfg);
RefinementConfig refinement_config_from_json(const nlohmann::json& j);

// F1 used for every comparison in the loop: a report whose failure rate
// classifies as Failing scores 0, since failed samples sit outside the
// confusion counts and would otherwise inflate F1.
double refine_score(const EvalReport& report, const BehaviorThresholds& t = {}) noexcept;

enum class StopReason { TargetReached, MaxIterations, Patience, MaxEpochs };
std::string_view to_string(StopReason r) noexcept;

struct RefineResult {
    std::string best_rule;
    EvalReport best_report;
    Trajectory trajectory;  // entries added by this call
    StopReason stop = StopReason::MaxIterations;
};

// Iterative refinement on `train`. `history` is earlier trajectory shown to
// the backend and continues the iteration numbering; it is not copied into the
// result. Throws Error(InitialRuleUnparseable); backend errors only mark the
// iteration as failed.
RefineResult refine_rule(const std::string& r0, const Dataset& train, const RefinementConfig& cfg,
                         llm::Backend& backend, const Trajectory& history = {}, std::size_t epoch = 1);

struct EpochRecord {
    std::size_t epoch = 0;
    std::string rule_text;
    double learn_f1 = 0.0;
    double validation_f1 = 0.0;
    bool accepted = false;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

// Accepted iff |learn - validation| <= threshold.
bool epoch_accepted(double learn_f1, double validation_f1, double threshold) noexcept;

struct EpochsResult {
    std::string rule_text;
    EvalReport learn_report;
    EvalReport validation_report;
    std::vector<EpochRecord> epochs;
    Trajectory trajectory;
    StopReason stop = StopReason::MaxEpochs;
};

// Multi-epoch learning on a learning/validation pair. Only accepted epochs
// advance the carried rule.
EpochsResult run_epochs(const std::string& prototype, const Dataset& learning, const Dataset& validation,
                        const RefinementConfig& cfg, llm::Backend& backend);

// Splits `train` into learning/validation in the ratio of cfg.split's train
// and validation fractions, then runs the overload above.
EpochsResult run_epochs(const std::string& prototype, const Dataset& train, const RefinementConfig& cfg,
                        llm::Backend& backend);

struct Candidate {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::string prototype;
    std::string rule_text;
    std::map<std::string, EvalReport> metrics;  // "train", "validation", "test"
    std::vector<EpochRecord> epochs;
    Trajectory trajectory;
    std::optional<std::string> failure;  // prototype generation failed
};

struct RuleArtifact {
    std::string rule_text;
    std::optional<Taxonomy> taxonomy;
    std::map<std::string, EvalReport> metrics;
    std::string trajectory_path;
    std::string config_hash;
    std::string created_at;  // ISO-8601 UTC
    std::uint64_t seed = 0;
    FeatureConfig features;
    std::size_t selected_candidate = 0;
    // Compact per-candidate summary: index, seed, prototype, rule, per-split F1.
    nlohmann::json candidates = nlohmann::json::array();
};

nlohmann::json to_json(const RuleArtifact& a);
// Throws Error(MalformedRecord); the rule text must parse.
RuleArtifact rule_artifact_from_json(const nlohmann::json& j);
RuleArtifact load_artifact(const std::filesystem::path& path);
void save_artifact(const std::filesystem::path& path, const RuleArtifact& a);

// Current time, seconds precision.
std::string utc_timestamp();

struct LearnResult {
    RuleArtifact artifact;
    std::vector<Candidate> candidates;
    DatasetSplit split;
};

// Index of the winner: highest test F1, then fewer clauses, then smaller rule text.
std::size_t select_candidate(const std::vector<Candidate>& candidates);

// Splits, extracts patterns from the training reasons, then for each of the
// num_starts candidates generates a prototype and runs the epochs. The backend
// only sees prompts built from the training split; validation and test are
// evaluated locally. Throws Error(MissingClass).
LearnResult learn(const Dataset& labeled, const RefinementConfig& cfg, llm::Backend& backend);

}  // namespace tsrules
