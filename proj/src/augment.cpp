#include "tsrules/augment.hpp"

#include "tsrules/error.hpp"
#include "tsrules/evaluation.hpp"
#include "tsrules/llm/tasks.hpp"
#include "tsrules/rule_eval.hpp"
#include "tsrules/rule_parser.hpp"

namespace tsrules {

rule::RuleAst augment_rule(const rule::RuleAst& ast, const Taxonomy& t) {
    for (const auto& [index, name] : t.assignment) {
        if (index >= ast.clauses.size()) {
            throw Error(ErrorCode::IncompleteAssignment, "assignment names clause " + std::to_string(index) +
                                                             " but the rule has " +
                                                             std::to_string(ast.clauses.size()));
        }
        if (!t.has_category(name)) {
            throw Error(ErrorCode::IncompleteAssignment, "clause " + std::to_string(index) +
                                                             " is assigned unknown category \"" + name + "\"");
        }
    }
    rule::RuleAst out = ast;
    for (std::size_t i = 0; i < out.clauses.size(); ++i) {
        const auto it = t.assignment.find(i);
        if (it == t.assignment.end()) {
            throw Error(ErrorCode::IncompleteAssignment, "clause " + std::to_string(i) + " has no category");
        }
        out.clauses[i].category = it->second;
    }
    return out;
}

bool verify_invariance(const rule::RuleAst& before, const rule::RuleAst& after, const Dataset& d,
                       const FeatureConfig& cfg, unsigned jobs) {
    const auto a = decide_all(rule::CompiledRule(before, cfg), d, jobs);
    const auto b = decide_all(rule::CompiledRule(after, cfg), d, jobs);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].is_anomaly != b[i].is_anomaly || a[i].failed != b[i].failed) return false;
    }
    return true;
}

RuleArtifact augment_artifact(const RuleArtifact& artifact, llm::Backend& backend) {
    const auto ast = rule::parse(artifact.rule_text);
    auto t = llm::generate_taxonomy(ast, backend);
    RuleArtifact out = artifact;
    out.rule_text = rule::print(augment_rule(ast, t));
    out.taxonomy = std::move(t);
    return out;
}

}  // namespace tsrules
