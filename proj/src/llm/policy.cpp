#include "tsrules/llm/policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <set>

#include "tsrules/error.hpp"
#include "tsrules/rng.hpp"
#include "tsrules/rule_parser.hpp"

namespace tsrules::llm::policy {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

constexpr double kTiny = 1e-9;

const double* literal(const rule::Arith& a) {
    const auto* n = std::get_if<rule::Number>(&a.node);
    return n ? &n->value : nullptr;
}

bool lower_bound(rule::CmpOp op) { return op == rule::CmpOp::Ge || op == rule::CmpOp::Gt; }
bool upper_bound(rule::CmpOp op) { return op == rule::CmpOp::Le || op == rule::CmpOp::Lt; }

rule::CmpOp mirror(rule::CmpOp op) {
    switch (op) {
        case rule::CmpOp::Ge: return rule::CmpOp::Le;
        case rule::CmpOp::Le: return rule::CmpOp::Ge;
        case rule::CmpOp::Gt: return rule::CmpOp::Lt;
        case rule::CmpOp::Lt: return rule::CmpOp::Gt;
        default: return op;
    }
}

// New threshold for `x op c` (op already oriented with x on the left).
double moved(double c, rule::CmpOp op, double fraction, bool loosen) {
    const double step = std::abs(c) < kTiny ? fraction : fraction * std::abs(c);
    const bool down = lower_bound(op) == loosen;
    return round_significant(down ? c - step : c + step);
}

rule::BoolPtr shift(const rule::Bool& b, double fraction, bool loosen) {
    return std::visit(
        overloaded{
            [&](const rule::Compare& c) -> rule::BoolPtr {
                const double* l = literal(*c.lhs);
                const double* r = literal(*c.rhs);
                if (r && !l && (lower_bound(c.op) || upper_bound(c.op))) {
                    return rule::compare(c.op, c.lhs, rule::number(moved(*r, c.op, fraction, loosen)));
                }
                if (l && !r && (lower_bound(c.op) || upper_bound(c.op))) {
                    return rule::compare(c.op, rule::number(moved(*l, mirror(c.op), fraction, loosen)), c.rhs);
                }
                return rule::compare(c.op, c.lhs, c.rhs);
            },
            [&](const rule::Not& n) { return rule::negate(shift(*n.operand, fraction, !loosen)); },
            [&](const rule::Logical& l) {
                return rule::logical(l.op, shift(*l.lhs, fraction, loosen), shift(*l.rhs, fraction, loosen));
            },
        },
        b.node);
}

std::string fraction_text(double f) { return rule::format_number(round_significant(f, 3)); }

struct Action {
    std::string note;
    std::function<rule::RuleAst()> apply;
};

// Largest lower-bound threshold on current_value outside any negation.
std::optional<double> current_value_floor(const rule::Bool& b) {
    return std::visit(
        overloaded{
            [](const rule::Compare& c) -> std::optional<double> {
                const auto is_current = [](const rule::Arith& a) {
                    const auto* f = std::get_if<rule::FeatureRef>(&a.node);
                    return f && f->feature == Feature::CurrentValue;
                };
                if (is_current(*c.lhs) && lower_bound(c.op)) {
                    if (const double* v = literal(*c.rhs)) return *v;
                }
                if (is_current(*c.rhs) && upper_bound(c.op)) {
                    if (const double* v = literal(*c.lhs)) return *v;
                }
                return std::nullopt;
            },
            [](const rule::Not&) -> std::optional<double> { return std::nullopt; },
            [](const rule::Logical& l) -> std::optional<double> {
                const auto a = current_value_floor(*l.lhs);
                const auto b = current_value_floor(*l.rhs);
                if (a && b) return std::max(*a, *b);
                return a ? a : b;
            },
        },
        b.node);
}

bool has_ratio(const rule::Arith& a) {
    return std::visit(overloaded{
                          [](const rule::Call& c) {
                              if (c.func == rule::Func::Ratio) return true;
                              return std::any_of(c.args.begin(), c.args.end(),
                                                 [](const rule::ArithPtr& p) { return has_ratio(*p); });
                          },
                          [](const rule::Binary& b) { return has_ratio(*b.lhs) || has_ratio(*b.rhs); },
                          [](const auto&) { return false; },
                      },
                      a.node);
}

bool has_ratio(const rule::Bool& b) {
    return std::visit(overloaded{
                          [](const rule::Compare& c) { return has_ratio(*c.lhs) || has_ratio(*c.rhs); },
                          [](const rule::Not& n) { return has_ratio(*n.operand); },
                          [](const rule::Logical& l) { return has_ratio(*l.lhs) || has_ratio(*l.rhs); },
                      },
                      b.node);
}

struct Bucket {
    std::string_view name;
    std::string_view description;
};

constexpr Bucket kCritical{"Critical Stock-Out Crisis", "Current week far above any normal level; immediate action."};
constexpr Bucket kModerate{"Moderate Stock Pressure", "Current week clearly elevated but below the critical tier."};
constexpr Bucket kEmerging{"Emerging Stock Pressure", "Current week mildly elevated; watch for escalation."};
constexpr Bucket kSpike{"Sudden Stock Spike", "Current week jumps far outside its own history."};
constexpr Bucket kEscalating{"Escalating Stock-Out Emergency", "Recent weeks trend upward without recovery."};
constexpr Bucket kDormancy{"Reactivation After Dormancy", "Activity returns after a run of zero weeks."};
constexpr Bucket kSustained{"Sustained Stock Pressure", "Recent weeks stay elevated relative to history."};
constexpr Bucket kOther{"Unclassified Stock Anomaly", "Flagged by a condition outside the named patterns."};

Bucket bucket_for(const rule::Bool& condition) {
    if (const auto floor = current_value_floor(condition)) {
        if (*floor >= 50.0) return kCritical;
        if (*floor >= 12.0) return kModerate;
        return kEmerging;
    }
    if (has_ratio(condition)) return kSpike;
    for (const auto f : rule::referenced_features(condition)) {
        switch (f) {
            case Feature::ZScore: return kSpike;
            case Feature::TrendSlope: return kEscalating;
            case Feature::ZeroRate: return kDormancy;
            case Feature::RecentMean:
            case Feature::RecentStd:
            case Feature::HistMax:
            case Feature::HistMin: return kSustained;
            case Feature::CurrentValue: break;
        }
    }
    return kOther;
}

}  // namespace

double round_significant(double value, int digits) {
    if (value == 0.0 || !std::isfinite(value)) return value;
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, digits);
    double out = value;
    std::from_chars(buf, end, out);
    return out;
}

std::vector<RankedFeature> rank_features(const ClassStats& stats) {
    std::vector<RankedFeature> out;
    for (const auto f : kAllFeatures) {
        const auto a = stats.anomaly.find(f);
        const auto n = stats.normal.find(f);
        if (a == stats.anomaly.end() || n == stats.normal.end()) continue;
        const double diff = a->second.mean - n->second.mean;
        if (std::abs(diff) < kTiny) continue;
        const double pooled =
            std::sqrt((a->second.stddev * a->second.stddev + n->second.stddev * n->second.stddev) / 2.0);
        const double gap = pooled < kTiny ? 1e9 : std::abs(diff) / pooled;
        const bool higher = diff > 0.0;
        const double tail = higher ? (a->second.p95 + n->second.p95) / 2.0 : (a->second.p5 + n->second.p5) / 2.0;
        out.push_back({f, gap, round_significant((a->second.mean + n->second.mean) / 2.0), round_significant(tail),
                       higher});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const RankedFeature& x, const RankedFeature& y) { return x.gap > y.gap; });
    return out;
}

namespace {

rule::Clause clause_at(const RankedFeature& f, double threshold) {
    return {rule::compare(f.anomaly_higher ? rule::CmpOp::Ge : rule::CmpOp::Le, rule::feature(f.feature),
                          rule::number(threshold)),
            std::nullopt};
}

}  // namespace

rule::Clause threshold_clause(const RankedFeature& f, double jitter) {
    return clause_at(f, round_significant(f.threshold * jitter));
}

rule::RuleAst prototype(const ClassStats& stats, std::size_t d, std::uint64_t seed, std::size_t candidate) {
    const auto ranked = rank_features(stats);
    if (ranked.empty()) {
        throw Error(ErrorCode::NoDiscriminativeFeature, "class means coincide on every feature");
    }
    rule::RuleAst ast;
    for (std::size_t i = 0; i < std::min(d, ranked.size()); ++i) {
        double jitter = 1.0;
        if (candidate > 0) {
            Rng rng(derive_seed(derive_seed(seed, candidate), static_cast<std::uint64_t>(ranked[i].feature)));
            jitter = rng.uniform(0.85, 1.15);
        }
        ast.clauses.push_back(threshold_clause(ranked[i], jitter));
    }
    return ast;
}

rule::RuleAst shift_thresholds(const rule::RuleAst& ast, double fraction, bool loosen,
                               std::optional<std::size_t> only_clause) {
    rule::RuleAst out = ast;
    for (std::size_t i = 0; i < out.clauses.size(); ++i) {
        if (only_clause && *only_clause != i) continue;
        out.clauses[i].condition = shift(*out.clauses[i].condition, fraction, loosen);
    }
    return out;
}

Modification modify(const ModifyInput& in) {
    const auto ranked = rank_features(in.stats);
    std::set<Feature> used;
    for (const auto& c : in.rule.clauses) {
        for (const auto f : rule::referenced_features(*c.condition)) used.insert(f);
    }
    std::vector<RankedFeature> unused;
    for (const auto& r : ranked) {
        if (!used.count(r.feature)) unused.push_back(r);
    }

    std::set<std::string> tried;
    for (const auto& a : in.history) {
        if (a.rule_text == in.rule_text && !a.improved && !a.note.empty()) tried.insert(a.note);
    }

    const std::size_t n = in.rule.clauses.size();
    std::vector<Action> actions;
    const auto shift_all = [&](double fraction, bool loosen) {
        actions.push_back({std::string(loosen ? "loosen" : "tighten") + ":all:" + fraction_text(fraction),
                           [&, fraction, loosen] { return shift_thresholds(in.rule, fraction, loosen); }});
    };
    const auto shift_each = [&](double fraction, bool loosen) {
        for (std::size_t i = 0; i < n; ++i) {
            actions.push_back({std::string(loosen ? "loosen" : "tighten") + ":clause=" + std::to_string(i) + ":" +
                                   fraction_text(fraction),
                               [&, fraction, loosen, i] { return shift_thresholds(in.rule, fraction, loosen, i); }});
        }
    };
    const auto add_each = [&] {
        for (const auto& f : unused) {
            actions.push_back({"add:" + std::string(feature_name(f.feature)), [&, f] {
                                   auto out = in.rule;
                                   // An added clause should catch a missed group, not
                                   // the bulk of the normal class.
                                   out.clauses.push_back(clause_at(f, f.tail_threshold));
                                   return out;
                               }});
        }
    };
    const auto drop_each = [&] {
        if (n < 2) return;
        for (std::size_t i = 0; i < n; ++i) {
            actions.push_back({"drop:clause=" + std::to_string(i), [&, i] {
                                   auto out = in.rule;
                                   out.clauses.erase(out.clauses.begin() + static_cast<long>(i));
                                   return out;
                               }});
        }
    };
    const auto and_each = [&] {
        for (const auto& f : unused) {
            actions.push_back({"and:" + std::string(feature_name(f.feature)), [&, f] {
                                   auto out = in.rule;
                                   const auto extra = threshold_clause(f).condition;
                                   for (auto& c : out.clauses) {
                                       c.condition = rule::logical(rule::LogicOp::And, c.condition, extra);
                                   }
                                   return out;
                               }});
        }
    };

    bool loosen = true;
    double fraction = 0.1;
    switch (in.behavior) {
        case Behavior::OverConservative:
            shift_all(0.1, true);
            add_each();
            shift_each(0.1, true);
            break;
        case Behavior::OverAggressive:
            loosen = false;
            shift_all(0.1, false);
            shift_each(0.1, false);
            drop_each();
            and_each();
            break;
        case Behavior::Balanced:
            loosen = in.report.recall < in.report.precision;
            fraction = 0.05;
            shift_all(0.05, loosen);
            shift_each(0.05, loosen);
            if (loosen) {
                add_each();
            } else {
                drop_each();
            }
            break;
        case Behavior::DegenerateAllNormal:
        case Behavior::DegenerateAllAnomaly:
        case Behavior::Failing: {
            const auto base = prototype(in.stats, in.top_features, in.seed, 0);
            for (std::size_t k = base.clauses.size(); k < ranked.size(); ++k) {
                actions.push_back({"regen:+" + std::string(feature_name(ranked[k].feature)), [&, base, k] {
                                       auto out = base;
                                       out.clauses.push_back(threshold_clause(ranked[k]));
                                       return out;
                                   }});
            }
            actions.push_back({"regen", [base] { return base; }});
            loosen = in.behavior != Behavior::DegenerateAllAnomaly;
            break;
        }
    }

    // Larger steps once the listed edits are used up, the preferred direction first.
    for (const double mult : {2.0, 4.0, 8.0}) {
        const double step = std::min(0.5, fraction * mult);
        shift_all(step, loosen);
        shift_all(step, !loosen);
    }
    for (const auto& a : actions) {
        if (!tried.count(a.note)) return {a.apply(), a.note};
    }
    const double step = std::min(0.5, fraction * static_cast<double>(tried.size() + 1));
    return {shift_thresholds(in.rule, step, loosen),
            std::string(loosen ? "loosen" : "tighten") + ":all:" + fraction_text(step)};
}

Taxonomy taxonomy(const rule::RuleAst& ast) {
    Taxonomy t;
    for (std::size_t i = 0; i < ast.clauses.size(); ++i) {
        const auto b = bucket_for(*ast.clauses[i].condition);
        const std::string name(b.name);
        if (!t.has_category(name)) t.categories.push_back({name, std::string(b.description)});
        t.assignment[i] = name;
    }
    return t;
}

}  // namespace tsrules::llm::policy
