#include "tsrules/rule_eval.hpp"

#include <algorithm>
#include <cmath>

#include "tsrules/rule_parser.hpp"

namespace tsrules::rule {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

std::size_t window_of(const FeatureRef& f, const FeatureConfig& cfg) {
    return f.window.value_or(cfg.window);
}

std::size_t needed(const FeatureRef& f, const FeatureConfig& cfg) {
    if (is_windowed(f.feature)) return window_of(f, cfg) + 1;
    return f.feature == Feature::CurrentValue ? 1 : 2;
}

std::size_t needed(const ValueAt& v) {
    return v.index < 0 ? static_cast<std::size_t>(-v.index) : static_cast<std::size_t>(v.index) + 1;
}

std::size_t required(const Arith& a, const FeatureConfig& cfg) {
    return std::visit(overloaded{
                          [](const Number&) -> std::size_t { return 1; },
                          [&](const FeatureRef& f) { return needed(f, cfg); },
                          [](const ValueAt& v) { return needed(v); },
                          [&](const Call& c) {
                              std::size_t n = 1;
                              for (const auto& arg : c.args) n = std::max(n, required(*arg, cfg));
                              return n;
                          },
                          [&](const Binary& b) {
                              return std::max(required(*b.lhs, cfg), required(*b.rhs, cfg));
                          },
                      },
                      a.node);
}

class Context {
public:
    Context(std::span<const double> values, const FeatureConfig& cfg) : values_(values), cfg_(cfg) {}

    double eval(const Arith& a) {
        return std::visit(
            overloaded{
                [](const Number& n) { return n.value; },
                [&](const FeatureRef& f) { return feature(f); },
                [&](const ValueAt& v) {
                    const auto n = static_cast<long>(values_.size());
                    return values_[static_cast<std::size_t>(v.index < 0 ? n + v.index : v.index)];
                },
                [&](const Call& c) {
                    if (c.func == Func::Abs) return std::abs(eval(*c.args[0]));
                    const double num = eval(*c.args[0]);
                    return safe_divide(num, eval(*c.args[1]), cfg_);
                },
                [&](const Binary& b) {
                    const double x = eval(*b.lhs);
                    const double y = eval(*b.rhs);
                    switch (b.op) {
                        case ArithOp::Add: return x + y;
                        case ArithOp::Sub: return x - y;
                        case ArithOp::Mul: return x * y;
                        case ArithOp::Div: return safe_divide(x, y, cfg_);
                    }
                    return 0.0;
                },
            },
            a.node);
    }

    bool eval(const Bool& b) {
        return std::visit(overloaded{
                              [&](const Compare& c) {
                                  const double x = eval(*c.lhs);
                                  const double y = eval(*c.rhs);
                                  switch (c.op) {
                                      case CmpOp::Ge: return x >= y;
                                      case CmpOp::Le: return x <= y;
                                      case CmpOp::Gt: return x > y;
                                      case CmpOp::Lt: return x < y;
                                      case CmpOp::Eq: return x == y;
                                      case CmpOp::Ne: return x != y;
                                  }
                                  return false;
                              },
                              [&](const Not& n) { return !eval(*n.operand); },
                              [&](const Logical& l) {
                                  const bool x = eval(*l.lhs);
                                  return l.op == LogicOp::And ? (x && eval(*l.rhs)) : (x || eval(*l.rhs));
                              },
                          },
                          b.node);
    }

private:
    std::span<const double> values_;
    const FeatureConfig& cfg_;
    std::optional<HistoryStats> history_;

    const HistoryStats& history() {
        if (!history_) history_ = history_stats(values_);
        return *history_;
    }

    double feature(const FeatureRef& f) {
        const std::size_t k = window_of(f, cfg_);
        switch (f.feature) {
            case Feature::CurrentValue: return values_.back();
            case Feature::RecentMean: return window::mean(values_, k);
            case Feature::RecentStd: return window::stddev(values_, k);
            case Feature::ZScore: return z_score(values_.back(), history(), cfg_);
            case Feature::TrendSlope: return window::slope(values_, k, cfg_);
            case Feature::ZeroRate: return window::zero_rate(values_, k);
            case Feature::HistMax: return history().max;
            case Feature::HistMin: return history().min;
        }
        return 0.0;
    }
};

bool is_constant(const Arith& a) {
    return std::visit(overloaded{
                          [](const Number&) { return true; },
                          [](const Call& c) {
                              return std::all_of(c.args.begin(), c.args.end(),
                                                 [](const ArithPtr& p) { return is_constant(*p); });
                          },
                          [](const Binary& b) { return is_constant(*b.lhs) && is_constant(*b.rhs); },
                          [](const auto&) { return false; },
                      },
                      a.node);
}

struct Validator {
    std::size_t series_length;
    const FeatureConfig& cfg;
    std::size_t clause = 0;
    std::vector<Warning> out;

    void visit(const Arith& a) {
        std::visit(overloaded{
                       [](const Number&) {},
                       [&](const FeatureRef& f) {
                           if (is_windowed(f.feature) && needed(f, cfg) > series_length) {
                               out.push_back({WarningKind::WindowTooLarge, clause,
                                              print(a) + " needs " + std::to_string(needed(f, cfg)) +
                                                  " values, series has " + std::to_string(series_length)});
                           }
                       },
                       [&](const ValueAt& v) {
                           if (needed(v) > series_length) {
                               out.push_back({WarningKind::IndexOutOfRange, clause,
                                              print(a) + " is outside a series of length " +
                                                  std::to_string(series_length)});
                           }
                       },
                       [&](const Call& c) {
                           for (const auto& arg : c.args) visit(*arg);
                       },
                       [&](const Binary& b) {
                           visit(*b.lhs);
                           visit(*b.rhs);
                       },
                   },
                   a.node);
    }

    void visit(const Bool& b) {
        std::visit(overloaded{
                       [&](const Compare& c) {
                           visit(*c.lhs);
                           visit(*c.rhs);
                           if (is_constant(*c.lhs) && is_constant(*c.rhs)) {
                               Context ctx({}, cfg);
                               const bool value = ctx.eval(b);
                               out.push_back({value ? WarningKind::Tautology : WarningKind::Contradiction,
                                              clause,
                                              "'" + print(b) + "' is always " + (value ? "true" : "false")});
                           }
                       },
                       [&](const Not& n) { visit(*n.operand); },
                       [&](const Logical& l) {
                           visit(*l.lhs);
                           visit(*l.rhs);
                       },
                   },
                   b.node);
    }
};

}  // namespace

std::size_t required_length(const Bool& condition, const FeatureConfig& cfg) {
    return std::visit(overloaded{
                          [&](const Compare& c) {
                              return std::max(required(*c.lhs, cfg), required(*c.rhs, cfg));
                          },
                          [&](const Not& n) { return required_length(*n.operand, cfg); },
                          [&](const Logical& l) {
                              return std::max(required_length(*l.lhs, cfg), required_length(*l.rhs, cfg));
                          },
                      },
                      condition.node);
}

std::size_t required_length(const RuleAst& ast, const FeatureConfig& cfg) {
    std::size_t n = 1;
    for (const auto& c : ast.clauses) n = std::max(n, required_length(*c.condition, cfg));
    return n;
}

bool holds(const Bool& condition, std::span<const double> values, const FeatureConfig& cfg) {
    Context ctx(values, cfg);
    return ctx.eval(condition);
}

CompiledRule::CompiledRule(RuleAst ast, const FeatureConfig& cfg)
    : ast_(std::move(ast)), cfg_(cfg), required_(rule::required_length(ast_, cfg_)) {}

Decision CompiledRule::operator()(std::span<const double> values) const {
    Decision d;
    if (values.size() < required_) {
        d.failed = true;
        return d;
    }
    Context ctx(values, cfg_);
    for (const auto& clause : ast_.clauses) {
        if (ctx.eval(*clause.condition) && !d.is_anomaly) {
            d.is_anomaly = true;
            d.category = clause.category;
        }
    }
    return d;
}

Decision evaluate(const RuleAst& ast, const TimeSeriesSample& sample, const FeatureConfig& cfg) {
    return CompiledRule(ast, cfg)(sample.values);
}

std::string_view to_string(WarningKind kind) noexcept {
    switch (kind) {
        case WarningKind::IndexOutOfRange: return "IndexOutOfRange";
        case WarningKind::WindowTooLarge: return "WindowTooLarge";
        case WarningKind::Tautology: return "Tautology";
        case WarningKind::Contradiction: return "Contradiction";
    }
    return "";
}

std::vector<Warning> validate(const RuleAst& ast, std::size_t series_length, const FeatureConfig& cfg) {
    Validator v{series_length, cfg, 0, {}};
    for (std::size_t i = 0; i < ast.clauses.size(); ++i) {
        v.clause = i;
        v.visit(*ast.clauses[i].condition);
    }
    return std::move(v.out);
}

}  // namespace tsrules::rule
