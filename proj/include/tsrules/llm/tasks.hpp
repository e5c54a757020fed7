#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsrules/dataset.hpp"
#include "tsrules/evaluation.hpp"
#include "tsrules/features.hpp"
#include "tsrules/llm/backend.hpp"
#include "tsrules/rule_ast.hpp"
#include "tsrules/taxonomy.hpp"
#include "tsrules/trajectory.hpp"

namespace tsrules::llm {

struct LabelResponse {
    Label label = Label::Normal;
    std::string reason;
};

// First JSON object in text with "label" and "reason".
// Throws Error(NoStructuredObject | InvalidLabelValue | EmptyReason).
LabelResponse parse_label_response(std::string_view text);

struct LabelRequest {
    std::string id;
    std::size_t trial = 1;  // 1-based
    std::size_t trials = 1;
    std::size_t weeks = 0;
    std::string context;
};

std::string label_prompt(const LabelRequest& request);

// One labeling call. Backend and parse errors propagate.
LabelResponse request_label(Backend& backend, const LabelRequest& request,
                            std::span<const std::uint8_t> png);

struct Phrase {
    std::string text;
    std::size_t support = 0;

    friend bool operator==(const Phrase&, const Phrase&) = default;
};

struct QualitativePatterns {
    std::vector<Phrase> phrases;

    friend bool operator==(const QualitativePatterns&, const QualitativePatterns&) = default;
};

nlohmann::json to_json(const QualitativePatterns& p);

// Throws Error(EmptyReasonCorpus) when no record carries a reason.
QualitativePatterns extract_patterns(const Dataset& labeled, Backend& backend);

struct PrototypeRequest {
    QualitativePatterns patterns;
    ClassStats stats;
    FeatureConfig features;
    // Multi-start index; 0 asks for the most direct rule.
    std::size_t candidate = 0;
};

// Returns rule text that parses. Unparseable answers are retried with the
// parse error appended, up to max_retries times; then Error(PrototypeUnparseable).
std::string generate_prototype(const PrototypeRequest& request, Backend& backend);

struct ModificationRequest {
    std::string rule_text;
    Behavior behavior = Behavior::Balanced;
    EvalReport report;
    const Trajectory* trajectory = nullptr;
    ClassStats stats;
    double anomaly_rate = 0.0;
    FeatureConfig features;
};

struct Proposal {
    std::string rule_text;
    std::string note;
};

// As generate_prototype; Error(ModificationUnparseable) after the retries.
Proposal propose_modification(const ModificationRequest& request, Backend& backend);

// Throws Error(MalformedResponse) unless every clause gets a known category.
Taxonomy generate_taxonomy(const rule::RuleAst& ast, Backend& backend);

}  // namespace tsrules::llm
