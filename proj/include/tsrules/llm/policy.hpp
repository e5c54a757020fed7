#pragma once

// Rule-writing heuristics of the scripted backend.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsrules/evaluation.hpp"
#include "tsrules/features.hpp"
#include "tsrules/rule_ast.hpp"
#include "tsrules/taxonomy.hpp"

namespace tsrules::llm::policy {

struct RankedFeature {
    Feature feature;
    // |mean_a - mean_n| / sqrt((sd_a^2 + sd_n^2) / 2)
    double gap = 0.0;
    double threshold = 0.0;  // midpoint of the class means
    // Midpoint of the two classes' outer percentiles (p95 when anomalies run
    // high, p5 otherwise): past what normal series typically reach.
    double tail_threshold = 0.0;
    bool anomaly_higher = true;
};

// Features with a positive gap, largest first; ties keep feature order.
std::vector<RankedFeature> rank_features(const ClassStats& stats);

double round_significant(double value, int digits = 6);

rule::Clause threshold_clause(const RankedFeature& f, double jitter = 1.0);

// Top-d clauses as separate OR-clauses. candidate > 0 jitters thresholds by a
// hashed factor in [0.85, 1.15]. Throws Error(NoDiscriminativeFeature).
rule::RuleAst prototype(const ClassStats& stats, std::size_t d, std::uint64_t seed, std::size_t candidate);

// Moves every threshold literal (a number compared against a non-constant
// expression, outside == and !=) by fraction * |c|. loosen makes each
// comparison easier to satisfy; polarity under ! is respected.
rule::RuleAst shift_thresholds(const rule::RuleAst& ast, double fraction, bool loosen,
                               std::optional<std::size_t> only_clause = std::nullopt);

struct Attempt {
    std::string rule_text;
    std::string note;
    bool improved = false;
};

struct ModifyInput {
    rule::RuleAst rule;
    std::string rule_text;
    Behavior behavior = Behavior::Balanced;
    EvalReport report;
    ClassStats stats;
    std::vector<Attempt> history;
    std::size_t top_features = 2;
    std::uint64_t seed = 0;
};

struct Modification {
    rule::RuleAst rule;
    std::string note;
};

// Ordered candidate edits for a behavior; the first one whose note was not
// already tried from this rule without improvement is chosen.
Modification modify(const ModifyInput& in);

// Category per clause from its dominant feature and threshold tier.
Taxonomy taxonomy(const rule::RuleAst& ast);

}  // namespace tsrules::llm::policy
