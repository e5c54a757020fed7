#pragma once

#include "tsrules/dataset.hpp"
#include "tsrules/features.hpp"
#include "tsrules/llm/backend.hpp"
#include "tsrules/refine.hpp"
#include "tsrules/rule_ast.hpp"
#include "tsrules/taxonomy.hpp"

namespace tsrules {

// Copy of `ast` with each clause's category set from the assignment; conditions
// are shared, not rebuilt. Throws Error(IncompleteAssignment) when a clause has
// no entry, an entry names a clause the rule does not have, or an assigned name
// is not among the categories.
rule::RuleAst augment_rule(const rule::RuleAst& ast, const Taxonomy& t);

// True iff both rules reach the same is_anomaly and failed flags on every sample.
bool verify_invariance(const rule::RuleAst& before, const rule::RuleAst& after, const Dataset& d,
                       const FeatureConfig& cfg, unsigned jobs = 1);

// Asks the backend for a taxonomy of the artifact's rule and returns the
// artifact with the categorized rule text and the taxonomy attached.
RuleArtifact augment_artifact(const RuleArtifact& artifact, llm::Backend& backend);

}  // namespace tsrules
