#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tsrules/features.hpp"

namespace tsrules::rule {

// Immutable expression trees; nodes are shared between rules freely.
struct Arith;
struct Bool;
using ArithPtr = std::shared_ptr<const Arith>;
using BoolPtr = std::shared_ptr<const Bool>;

enum class Func { Ratio, Abs };
enum class ArithOp { Add, Sub, Mul, Div };
enum class CmpOp { Ge, Le, Gt, Lt, Eq, Ne };
enum class LogicOp { And, Or };

struct Number {
    double value;
};

// A feature reference. Windowed features carry an explicit window when written
// as a call, e.g. recent_mean(4); the bare form uses FeatureConfig::window.
struct FeatureRef {
    Feature feature;
    std::optional<std::size_t> window;
};

// values[index]; negative indices count from the end, -1 is the current week.
struct ValueAt {
    long index;
};

struct Call {
    Func func;
    std::vector<ArithPtr> args;
};

struct Binary {
    ArithOp op;
    ArithPtr lhs;
    ArithPtr rhs;
};

struct Arith {
    std::variant<Number, FeatureRef, ValueAt, Call, Binary> node;
};

struct Compare {
    CmpOp op;
    ArithPtr lhs;
    ArithPtr rhs;
};

struct Not {
    BoolPtr operand;
};

struct Logical {
    LogicOp op;
    BoolPtr lhs;
    BoolPtr rhs;
};

struct Bool {
    std::variant<Compare, Not, Logical> node;
};

struct Clause {
    BoolPtr condition;
    std::optional<std::string> category;
};

struct RuleAst {
    std::vector<Clause> clauses;
};

// Structural equality (parentheses are not part of the tree).
bool equal(const Arith& a, const Arith& b);
bool equal(const Bool& a, const Bool& b);
bool equal(const Clause& a, const Clause& b);
bool operator==(const RuleAst& a, const RuleAst& b);

std::string_view func_name(Func f) noexcept;
std::string_view op_symbol(ArithOp op) noexcept;
std::string_view op_symbol(CmpOp op) noexcept;
std::string_view op_symbol(LogicOp op) noexcept;

// Builders.
ArithPtr number(double value);
ArithPtr feature(Feature f, std::optional<std::size_t> window = std::nullopt);
ArithPtr value_at(long index);
ArithPtr call(Func f, std::vector<ArithPtr> args);
ArithPtr binary(ArithOp op, ArithPtr lhs, ArithPtr rhs);
BoolPtr compare(CmpOp op, ArithPtr lhs, ArithPtr rhs);
BoolPtr negate(BoolPtr operand);
BoolPtr logical(LogicOp op, BoolPtr lhs, BoolPtr rhs);
BoolPtr all_of(const std::vector<BoolPtr>& terms);

// Features referenced anywhere in the condition, in first-appearance order.
std::vector<Feature> referenced_features(const Bool& condition);

}  // namespace tsrules::rule
