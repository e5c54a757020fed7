#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsrules/dataset.hpp"
#include "tsrules/features.hpp"
#include "tsrules/rule_ast.hpp"
#include "tsrules/rule_eval.hpp"

namespace tsrules {

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Zero denominators give 0, except tp = fp = fn = 0 which is scored 1/1/1.
Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) noexcept;

struct EvalReport {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
    std::size_t failures = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double predicted_positive_rate = 0.0;

    std::size_t total() const noexcept { return tp + fp + tn + fn + failures; }
    // Anomaly share among the labeled samples that were scored.
    double anomaly_rate() const noexcept;

    static EvalReport from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn,
                                  std::size_t failures = 0) noexcept;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);

enum class Behavior {
    OverConservative,
    OverAggressive,
    Balanced,
    DegenerateAllNormal,
    DegenerateAllAnomaly,
    Failing,
};

std::string_view to_string(Behavior b) noexcept;
std::optional<Behavior> parse_behavior(std::string_view name) noexcept;

struct BehaviorThresholds {
    double max_failure_rate = 0.10;
    double all_anomaly_rate = 0.98;
    double all_normal_rate = 0.02;
    double gap = 0.15;
};

// First matching case wins: Failing, DegenerateAllAnomaly, DegenerateAllNormal,
// OverConservative, OverAggressive, Balanced.
Behavior analyze_behavior(const EvalReport& report, double dataset_anomaly_rate,
                          const BehaviorThresholds& t = {}) noexcept;

// Per-sample predictions against labels. Throws Error(MissingLabel) on unlabeled records.
EvalReport tally(const Dataset& dataset, const std::vector<rule::Decision>& decisions);

// jobs > 1 splits the samples across threads; the result equals the sequential one.
std::vector<rule::Decision> decide_all(const rule::CompiledRule& rule, const Dataset& dataset,
                                       unsigned jobs = 1);

EvalReport evaluate_rule(const rule::RuleAst& ast, const Dataset& dataset, const FeatureConfig& cfg,
                         unsigned jobs = 1);

// Flags a sample iff z_score >= threshold.
EvalReport baseline_zscore(const Dataset& dataset, double threshold, const FeatureConfig& cfg);

}  // namespace tsrules
