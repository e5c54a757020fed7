#include "tsrules/rule_ast.hpp"

#include <algorithm>

namespace tsrules::rule {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

bool equal(const ArithPtr& a, const ArithPtr& b) {
    if (!a || !b) return a == b;
    return equal(*a, *b);
}

bool equal(const BoolPtr& a, const BoolPtr& b) {
    if (!a || !b) return a == b;
    return equal(*a, *b);
}

void collect(const Arith& a, std::vector<Feature>& out) {
    std::visit(overloaded{
                   [&](const FeatureRef& f) {
                       if (std::find(out.begin(), out.end(), f.feature) == out.end()) {
                           out.push_back(f.feature);
                       }
                   },
                   [&](const Call& c) {
                       for (const auto& arg : c.args) collect(*arg, out);
                   },
                   [&](const Binary& b) {
                       collect(*b.lhs, out);
                       collect(*b.rhs, out);
                   },
                   [](const auto&) {},
               },
               a.node);
}

void collect(const Bool& b, std::vector<Feature>& out) {
    std::visit(overloaded{
                   [&](const Compare& c) {
                       collect(*c.lhs, out);
                       collect(*c.rhs, out);
                   },
                   [&](const Not& n) { collect(*n.operand, out); },
                   [&](const Logical& l) {
                       collect(*l.lhs, out);
                       collect(*l.rhs, out);
                   },
               },
               b.node);
}

}  // namespace

bool equal(const Arith& a, const Arith& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        overloaded{
            [&](const Number& x) { return x.value == std::get<Number>(b.node).value; },
            [&](const FeatureRef& x) {
                const auto& y = std::get<FeatureRef>(b.node);
                return x.feature == y.feature && x.window == y.window;
            },
            [&](const ValueAt& x) { return x.index == std::get<ValueAt>(b.node).index; },
            [&](const Call& x) {
                const auto& y = std::get<Call>(b.node);
                return x.func == y.func &&
                       std::equal(x.args.begin(), x.args.end(), y.args.begin(), y.args.end(),
                                  [](const ArithPtr& p, const ArithPtr& q) { return equal(p, q); });
            },
            [&](const Binary& x) {
                const auto& y = std::get<Binary>(b.node);
                return x.op == y.op && equal(x.lhs, y.lhs) && equal(x.rhs, y.rhs);
            },
        },
        a.node);
}

bool equal(const Bool& a, const Bool& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(overloaded{
                          [&](const Compare& x) {
                              const auto& y = std::get<Compare>(b.node);
                              return x.op == y.op && equal(x.lhs, y.lhs) && equal(x.rhs, y.rhs);
                          },
                          [&](const Not& x) { return equal(x.operand, std::get<Not>(b.node).operand); },
                          [&](const Logical& x) {
                              const auto& y = std::get<Logical>(b.node);
                              return x.op == y.op && equal(x.lhs, y.lhs) && equal(x.rhs, y.rhs);
                          },
                      },
                      a.node);
}

bool equal(const Clause& a, const Clause& b) {
    return a.category == b.category && equal(a.condition, b.condition);
}

bool operator==(const RuleAst& a, const RuleAst& b) {
    return std::equal(a.clauses.begin(), a.clauses.end(), b.clauses.begin(), b.clauses.end(),
                      [](const Clause& x, const Clause& y) { return equal(x, y); });
}

std::string_view func_name(Func f) noexcept {
    return f == Func::Ratio ? "ratio" : "abs";
}

std::string_view op_symbol(ArithOp op) noexcept {
    switch (op) {
        case ArithOp::Add: return "+";
        case ArithOp::Sub: return "-";
        case ArithOp::Mul: return "*";
        case ArithOp::Div: return "/";
    }
    return "?";
}

std::string_view op_symbol(CmpOp op) noexcept {
    switch (op) {
        case CmpOp::Ge: return ">=";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Lt: return "<";
        case CmpOp::Eq: return "==";
        case CmpOp::Ne: return "!=";
    }
    return "?";
}

std::string_view op_symbol(LogicOp op) noexcept {
    return op == LogicOp::And ? "&&" : "||";
}

ArithPtr number(double value) { return std::make_shared<const Arith>(Arith{Number{value}}); }

ArithPtr feature(Feature f, std::optional<std::size_t> window) {
    return std::make_shared<const Arith>(Arith{FeatureRef{f, window}});
}

ArithPtr value_at(long index) { return std::make_shared<const Arith>(Arith{ValueAt{index}}); }

ArithPtr call(Func f, std::vector<ArithPtr> args) {
    return std::make_shared<const Arith>(Arith{Call{f, std::move(args)}});
}

ArithPtr binary(ArithOp op, ArithPtr lhs, ArithPtr rhs) {
    return std::make_shared<const Arith>(Arith{Binary{op, std::move(lhs), std::move(rhs)}});
}

BoolPtr compare(CmpOp op, ArithPtr lhs, ArithPtr rhs) {
    return std::make_shared<const Bool>(Bool{Compare{op, std::move(lhs), std::move(rhs)}});
}

BoolPtr negate(BoolPtr operand) { return std::make_shared<const Bool>(Bool{Not{std::move(operand)}}); }

BoolPtr logical(LogicOp op, BoolPtr lhs, BoolPtr rhs) {
    return std::make_shared<const Bool>(Bool{Logical{op, std::move(lhs), std::move(rhs)}});
}

BoolPtr all_of(const std::vector<BoolPtr>& terms) {
    BoolPtr out = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) out = logical(LogicOp::And, out, terms[i]);
    return out;
}

std::vector<Feature> referenced_features(const Bool& condition) {
    std::vector<Feature> out;
    collect(condition, out);
    return out;
}

}  // namespace tsrules::rule
