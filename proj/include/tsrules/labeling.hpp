#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsrules/dataset.hpp"
#include "tsrules/error.hpp"
#include "tsrules/features.hpp"
#include "tsrules/llm/backend.hpp"
#include "tsrules/rule_ast.hpp"

namespace tsrules {

struct ConsensusConfig {
    std::size_t trials_per_model = 3;  // odd
    // Samples matching this rule are labeled Anomaly without asking any backend.
    std::optional<std::string> prefilter;
    std::string context_prompt;
    FeatureConfig features;
};

// Throws Error(InvalidConfig); also checks that the prefilter parses.
void validate(const ConsensusConfig& cfg);
nlohmann::json to_json(const ConsensusConfig& cfg);
ConsensusConfig consensus_config_from_json(const nlohmann::json& j);

enum class ConsensusStatus { Accepted, Disagreement, Prefiltered, BackendFailure };

std::string_view to_string(ConsensusStatus s) noexcept;

struct Vote {
    std::string backend;
    std::size_t trial = 1;
    std::optional<Label> label;
    std::string reason;
    std::optional<ErrorCode> failure;

    friend bool operator==(const Vote&, const Vote&) = default;
};

struct ConsensusOutcome {
    ConsensusStatus status = ConsensusStatus::Disagreement;
    std::optional<Label> label;
    std::optional<std::string> reason;
    std::vector<Vote> votes;
    // Majority per backend, in backend order; empty optional for a tie or no valid vote.
    std::vector<std::optional<Label>> majorities;
};

// Majority over the labels present; nullopt on a tie or when none are present.
std::optional<Label> majority(const std::vector<Vote>& votes);

// Two tiers: majority over trials per backend, then unanimity across backends.
// Never throws for backend trouble; failures are recorded in the votes.
ConsensusOutcome consensus_label(const TimeSeriesSample& sample, const ConsensusConfig& cfg,
                                 const std::vector<llm::Backend*>& backends);

struct DisagreementEntry {
    std::string id;
    ConsensusStatus status = ConsensusStatus::Disagreement;
    std::vector<Vote> votes;
    std::string chart_path;
};

nlohmann::json to_json(const DisagreementEntry& e);
DisagreementEntry disagreement_from_json(const nlohmann::json& j);
std::string dump_disagreements(const std::vector<DisagreementEntry>& report);  // JSONL
std::vector<DisagreementEntry> parse_disagreements(std::string_view jsonl);

struct LabelingOptions {
    unsigned jobs = 1;
    // When set, charts of reported samples are written here as <id>.png.
    std::optional<std::filesystem::path> chart_dir;
};

struct LabelingResult {
    Dataset labeled;  // Accepted and Prefiltered samples, input order
    std::vector<DisagreementEntry> report;
    std::vector<ConsensusOutcome> outcomes;  // one per input sample
};

LabelingResult label_dataset(const Dataset& input, const ConsensusConfig& cfg,
                             const std::vector<llm::Backend*>& backends, const LabelingOptions& options = {});

// Overrides file: JSONL {id, label, reason}; rows with a null label are
// skipped. Matching records are relabeled
// with provenance HumanOverride. Ids missing from `labeled` but present in
// `pool` (e.g. excluded disagreements) are appended. Throws
// Error(UnknownSampleId) for ids found in neither.
Dataset apply_overrides(const Dataset& labeled, std::string_view overrides_jsonl, const Dataset* pool = nullptr);
Dataset apply_overrides(const Dataset& labeled, const std::filesystem::path& overrides, const Dataset* pool = nullptr);

// File-system-safe chart name for an id.
std::string chart_file_name(std::string_view id);

}  // namespace tsrules
