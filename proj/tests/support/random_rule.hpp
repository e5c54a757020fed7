#pragma once

// Random well-formed rule ASTs for property tests.

#include <cmath>
#include <string>
#include <vector>

#include "tsrules/features.hpp"
#include "tsrules/rng.hpp"
#include "tsrules/rule_ast.hpp"

namespace tsrules::fixtures {

struct RuleShape {
    std::size_t max_clauses = 4;
    int max_depth = 3;
    std::size_t max_window = 12;
    long max_index = 20;
    bool categories = true;
};

class RandomRule {
public:
    explicit RandomRule(std::uint64_t seed, RuleShape shape = {}) : rng_(seed), shape_(shape) {}

    rule::RuleAst next() {
        rule::RuleAst ast;
        const std::size_t n = 1 + rng_.below(shape_.max_clauses);
        for (std::size_t i = 0; i < n; ++i) {
            rule::Clause c{boolean(shape_.max_depth), std::nullopt};
            if (shape_.categories && rng_.bernoulli(0.5)) c.category = category();
            ast.clauses.push_back(std::move(c));
        }
        return ast;
    }

    double literal() {
        switch (rng_.below(5)) {
            case 0: return static_cast<double>(rng_.below(100));
            case 1: return std::round(rng_.uniform(-50, 150) * 100) / 100;
            case 2: return rng_.uniform(0, 1);
            case 3: return -static_cast<double>(rng_.below(20));
            default: return rng_.uniform(-1e6, 1e6);
        }
    }

    rule::ArithPtr arith(int depth) {
        const auto pick = depth <= 0 ? rng_.below(3) : rng_.below(6);
        switch (pick) {
            case 0: return rule::number(literal());
            case 1: {
                const auto f = kAllFeatures[rng_.below(kFeatureCount)];
                if (is_windowed(f) && rng_.bernoulli(0.5)) {
                    return rule::feature(f, 1 + rng_.below(shape_.max_window));
                }
                return rule::feature(f);
            }
            case 2: {
                const long i = static_cast<long>(rng_.below(static_cast<std::uint64_t>(shape_.max_index)));
                return rule::value_at(rng_.bernoulli(0.7) ? -(i + 1) : i);
            }
            case 3:
                return rule::call(rule::Func::Ratio, {arith(depth - 1), arith(depth - 1)});
            case 4:
                return rule::call(rule::Func::Abs, {arith(depth - 1)});
            default:
                return rule::binary(static_cast<rule::ArithOp>(rng_.below(4)), arith(depth - 1),
                                    arith(depth - 1));
        }
    }

    rule::BoolPtr boolean(int depth) {
        const auto pick = depth <= 0 ? 0 : rng_.below(4);
        switch (pick) {
            case 1: return rule::negate(boolean(depth - 1));
            case 2:
            case 3:
                return rule::logical(pick == 2 ? rule::LogicOp::And : rule::LogicOp::Or,
                                     boolean(depth - 1), boolean(depth - 1));
            default:
                return rule::compare(static_cast<rule::CmpOp>(rng_.below(6)), arith(depth),
                                     arith(depth - 1));
        }
    }

    std::string category() {
        static const std::vector<std::string> names = {
            "Critical Stock-Out Crisis", "Moderate Stock Pressure", "tier \"B\"", "a\\b", "x"};
        return names[rng_.below(names.size())];
    }

    Rng& rng() { return rng_; }

private:
    Rng rng_;
    RuleShape shape_;
};

}  // namespace tsrules::fixtures
