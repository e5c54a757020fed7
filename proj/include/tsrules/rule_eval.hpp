#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tsrules/dataset.hpp"
#include "tsrules/features.hpp"
#include "tsrules/rule_ast.hpp"

namespace tsrules::rule {

struct Decision {
    bool is_anomaly = false;
    // Category of the first clause whose condition holds.
    std::optional<std::string> category;
    // Set when the rule references an index or window the series cannot supply;
    // forces is_anomaly = false.
    bool failed = false;

    friend bool operator==(const Decision&, const Decision&) = default;
};

// Shortest series on which every index and window in the rule resolves.
std::size_t required_length(const RuleAst& ast, const FeatureConfig& cfg);
std::size_t required_length(const Bool& condition, const FeatureConfig& cfg);

// Evaluates one condition on a series already known to be long enough.
bool holds(const Bool& condition, std::span<const double> values, const FeatureConfig& cfg);

// Never throws. Every clause is evaluated, so is_anomaly does not depend on clause order.
Decision evaluate(const RuleAst& ast, const TimeSeriesSample& sample, const FeatureConfig& cfg);

// A parsed rule with its length requirement resolved once; cheap to evaluate in bulk.
class CompiledRule {
public:
    CompiledRule(RuleAst ast, const FeatureConfig& cfg);

    Decision operator()(std::span<const double> values) const;
    Decision operator()(const TimeSeriesSample& sample) const { return (*this)(sample.values); }

    const RuleAst& ast() const noexcept { return ast_; }
    const FeatureConfig& config() const noexcept { return cfg_; }
    std::size_t required_length() const noexcept { return required_; }

private:
    RuleAst ast_;
    FeatureConfig cfg_;
    std::size_t required_;
};

enum class WarningKind { IndexOutOfRange, WindowTooLarge, Tautology, Contradiction };

struct Warning {
    WarningKind kind;
    std::size_t clause;
    std::string message;
};

std::string_view to_string(WarningKind kind) noexcept;

// Static checks against a series length; bare windowed features use cfg.window.
std::vector<Warning> validate(const RuleAst& ast, std::size_t series_length,
                              const FeatureConfig& cfg = {});

}  // namespace tsrules::rule
