#include "tsrules/rule_parser.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <vector>

#include "tsrules/error.hpp"

namespace tsrules::rule {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

enum class Tok { Number, Ident, String, Punct, End };

struct Token {
    Tok kind;
    std::string text;  // lexeme; decoded contents for strings
    int line;
    int column;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            if (pos_ >= src_.size()) {
                out.push_back({Tok::End, "", line_, col_});
                return out;
            }
            out.push_back(next());
        }
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    char advance() {
        const char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_space() {
        while (pos_ < src_.size() &&
               (peek() == ' ' || peek() == '\t' || peek() == '\n' || peek() == '\r')) {
            advance();
        }
    }

    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_ident_start(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    }

    Token next() {
        const int line = line_;
        const int col = col_;
        const char c = peek();

        if (is_digit(c) || (c == '.' && is_digit(peek(1)))) {
            std::string text;
            while (is_digit(peek())) text += advance();
            if (peek() == '.') {
                text += advance();
                while (is_digit(peek())) text += advance();
            }
            if (peek() == 'e' || peek() == 'E') {
                const std::size_t sign = (peek(1) == '+' || peek(1) == '-') ? 1 : 0;
                if (is_digit(peek(1 + sign))) {
                    text += advance();
                    if (sign) text += advance();
                    while (is_digit(peek())) text += advance();
                }
            }
            return {Tok::Number, text, line, col};
        }
        if (is_ident_start(c)) {
            std::string text;
            while (is_ident_start(peek()) || is_digit(peek())) text += advance();
            return {Tok::Ident, text, line, col};
        }
        if (c == '"') {
            advance();
            std::string text;
            for (;;) {
                if (pos_ >= src_.size()) {
                    throw ParseError(ErrorCode::SyntaxError, "unterminated string", line, col);
                }
                const char d = advance();
                if (d == '"') break;
                if (d == '\\') {
                    if (pos_ >= src_.size()) {
                        throw ParseError(ErrorCode::SyntaxError, "unterminated string", line, col);
                    }
                    const char e = advance();
                    switch (e) {
                        case '"': text += '"'; break;
                        case '\\': text += '\\'; break;
                        case 'n': text += '\n'; break;
                        case 't': text += '\t'; break;
                        case 'r': text += '\r'; break;
                        case '/': text += '/'; break;
                        default:
                            throw ParseError(ErrorCode::SyntaxError,
                                             std::string("unknown escape '\\") + e + "'", line_, col_ - 1);
                    }
                } else {
                    text += d;
                }
            }
            return {Tok::String, text, line, col};
        }

        static constexpr std::array<std::string_view, 6> kTwo = {">=", "<=", "==", "!=", "&&", "||"};
        for (const auto op : kTwo) {
            if (src_.substr(pos_, 2) == op) {
                advance();
                advance();
                return {Tok::Punct, std::string(op), line, col};
            }
        }
        static constexpr std::string_view kOne = "<>!()[],;+-*/";
        if (kOne.find(c) != std::string_view::npos) {
            advance();
            return {Tok::Punct, std::string(1, c), line, col};
        }
        throw ParseError(ErrorCode::SyntaxError, std::string("unexpected character '") + c + "'", line, col);
    }
};

bool is_keyword(std::string_view s) {
    return s == "if" || s == "then" || s == "anomaly" || s == "as";
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    RuleAst rule() {
        RuleAst ast;
        ast.clauses.push_back(clause());
        while (accept(";")) ast.clauses.push_back(clause());
        if (cur().kind != Tok::End) fail("expected ';' or end of rule");
        return ast;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;

    const Token& cur() const { return toks_[pos_]; }

    bool is(std::string_view punct) const {
        return cur().kind == Tok::Punct && cur().text == punct;
    }
    bool is_word(std::string_view word) const {
        return cur().kind == Tok::Ident && cur().text == word;
    }
    bool accept(std::string_view punct) {
        if (!is(punct)) return false;
        ++pos_;
        return true;
    }

    [[noreturn]] void fail(const std::string& what, ErrorCode code = ErrorCode::SyntaxError) const {
        const auto& t = cur();
        const std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(code, what + ", found " + found, t.line, t.column);
    }

    void expect(std::string_view punct) {
        if (!accept(punct)) fail("expected '" + std::string(punct) + "'");
    }
    void expect_word(std::string_view word) {
        if (!is_word(word)) fail("expected '" + std::string(word) + "'");
        ++pos_;
    }

    Clause clause() {
        expect_word("if");
        Clause c;
        c.condition = bexpr();
        expect_word("then");
        expect_word("anomaly");
        if (is_word("as")) {
            ++pos_;
            if (cur().kind != Tok::String) fail("expected category string");
            if (cur().text.empty()) fail("category must not be empty");
            c.category = cur().text;
            ++pos_;
        }
        return c;
    }

    BoolPtr bexpr() {
        BoolPtr lhs = bterm();
        while (accept("||")) lhs = logical(LogicOp::Or, lhs, bterm());
        return lhs;
    }

    BoolPtr bterm() {
        BoolPtr lhs = bfac();
        while (accept("&&")) lhs = logical(LogicOp::And, lhs, bfac());
        return lhs;
    }

    static bool starts_arith_continuation(const Token& t) {
        if (t.kind != Tok::Punct) return false;
        static constexpr std::array<std::string_view, 10> kOps = {">=", "<=", ">", "<", "==",
                                                                  "!=", "+",  "-", "*", "/"};
        for (const auto op : kOps) {
            if (t.text == op) return true;
        }
        return false;
    }

    BoolPtr bfac() {
        if (accept("!")) return negate(bfac());
        if (is("(")) {
            // "(" may open a boolean group or an arithmetic operand of a comparison;
            // try the boolean reading first and fall back.
            const std::size_t start = pos_;
            std::optional<ParseError> bool_error;
            try {
                ++pos_;
                BoolPtr inner = bexpr();
                expect(")");
                if (!starts_arith_continuation(cur())) return inner;
            } catch (const ParseError& e) {
                bool_error = e;
            }
            pos_ = start;
            try {
                return cmp();
            } catch (const ParseError& e) {
                if (bool_error && (bool_error->line() > e.line() ||
                                   (bool_error->line() == e.line() && bool_error->column() > e.column()))) {
                    throw *bool_error;
                }
                throw;
            }
        }
        return cmp();
    }

    BoolPtr cmp() {
        ArithPtr lhs = aexpr();
        static constexpr std::array<std::pair<std::string_view, CmpOp>, 6> kOps = {{
            {">=", CmpOp::Ge}, {"<=", CmpOp::Le}, {">", CmpOp::Gt},
            {"<", CmpOp::Lt},  {"==", CmpOp::Eq}, {"!=", CmpOp::Ne},
        }};
        for (const auto& [sym, op] : kOps) {
            if (accept(sym)) return compare(op, lhs, aexpr());
        }
        fail("expected comparison operator");
    }

    ArithPtr aexpr() {
        ArithPtr lhs = term();
        for (;;) {
            if (accept("+")) {
                lhs = binary(ArithOp::Add, lhs, term());
            } else if (accept("-")) {
                lhs = binary(ArithOp::Sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    ArithPtr term() {
        ArithPtr lhs = fac();
        for (;;) {
            if (accept("*")) {
                lhs = binary(ArithOp::Mul, lhs, fac());
            } else if (accept("/")) {
                lhs = binary(ArithOp::Div, lhs, fac());
            } else {
                return lhs;
            }
        }
    }

    double number_literal() {
        const auto& t = cur();
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
        if (ec != std::errc() || ptr != t.text.data() + t.text.size() || !std::isfinite(value)) {
            fail("number out of range");
        }
        ++pos_;
        return value;
    }

    long integer_literal() {
        const auto& t = cur();
        if (t.kind != Tok::Number || t.text.find_first_not_of("0123456789") != std::string::npos) {
            fail("expected integer");
        }
        long value = 0;
        const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
        if (ec != std::errc()) fail("integer out of range");
        ++pos_;
        return value;
    }

    std::vector<ArithPtr> call_args() {
        expect("(");
        std::vector<ArithPtr> args;
        args.push_back(aexpr());
        while (accept(",")) args.push_back(aexpr());
        expect(")");
        return args;
    }

    ArithPtr fac() {
        if (cur().kind == Tok::Number) return number(number_literal());
        if (is("-")) {
            ++pos_;
            if (cur().kind != Tok::Number) fail("expected number after unary '-'");
            return number(-number_literal());
        }
        if (accept("(")) {
            ArithPtr inner = aexpr();
            expect(")");
            return inner;
        }
        if (cur().kind != Tok::Ident) fail("expected expression");

        const Token name = cur();
        if (is_keyword(name.text)) fail("unexpected keyword");
        ++pos_;

        if (name.text == "values") {
            expect("[");
            const bool negative = accept("-");
            const long index = integer_literal();
            expect("]");
            return value_at(negative ? -index : index);
        }

        const auto arity_error = [&](const std::string& what) {
            throw ParseError(ErrorCode::ArityMismatch, what, name.line, name.column);
        };

        if (name.text == "ratio" || name.text == "abs") {
            const Func f = name.text == "ratio" ? Func::Ratio : Func::Abs;
            const std::size_t want = f == Func::Ratio ? 2 : 1;
            if (!is("(")) arity_error(name.text + " expects " + std::to_string(want) + " argument(s)");
            auto args = call_args();
            if (args.size() != want) {
                arity_error(name.text + " expects " + std::to_string(want) + " argument(s), got " +
                            std::to_string(args.size()));
            }
            return call(f, std::move(args));
        }

        const auto f = feature_from_name(name.text);
        if (!f) {
            throw ParseError(ErrorCode::UnknownIdentifier, "unknown identifier '" + name.text + "'",
                             name.line, name.column);
        }
        if (!is("(")) return feature(*f);
        if (!is_windowed(*f)) arity_error(name.text + " takes no arguments");

        const auto open = cur();
        auto args = call_args();
        if (args.size() != 1) {
            arity_error(name.text + " expects 1 window argument, got " + std::to_string(args.size()));
        }
        const auto* lit = std::get_if<Number>(&args.front()->node);
        if (!lit || lit->value < 1.0 || lit->value != std::floor(lit->value) || lit->value > 1e6) {
            throw ParseError(ErrorCode::SyntaxError,
                             "window of " + name.text + " must be a positive integer literal",
                             open.line, open.column + 1);
        }
        return feature(*f, static_cast<std::size_t>(lit->value));
    }
};

// Binding strength, loosest first.
int precedence(const Arith& a) {
    if (const auto* b = std::get_if<Binary>(&a.node)) {
        return (b->op == ArithOp::Add || b->op == ArithOp::Sub) ? 1 : 2;
    }
    return 3;
}

int precedence(const Bool& b) {
    if (const auto* l = std::get_if<Logical>(&b.node)) return l->op == LogicOp::Or ? 1 : 2;
    return 3;
}

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string format_number(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

RuleAst parse(std::string_view text) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw ParseError(ErrorCode::EmptyRule, "rule text is empty", 1, 1);
    }
    Parser parser(Lexer(text).run());
    return parser.rule();
}

std::string print(const Arith& expr) {
    return std::visit(
        overloaded{
            [](const Number& n) { return format_number(n.value); },
            [](const FeatureRef& f) {
                std::string s(feature_name(f.feature));
                if (f.window) s += "(" + std::to_string(*f.window) + ")";
                return s;
            },
            [](const ValueAt& v) { return "values[" + std::to_string(v.index) + "]"; },
            [](const Call& c) {
                std::string s(func_name(c.func));
                s += "(";
                for (std::size_t i = 0; i < c.args.size(); ++i) {
                    if (i) s += ", ";
                    s += print(*c.args[i]);
                }
                return s + ")";
            },
            [&](const Binary& b) {
                const int p = precedence(expr);
                std::string lhs = print(*b.lhs);
                std::string rhs = print(*b.rhs);
                if (precedence(*b.lhs) < p) lhs = "(" + lhs + ")";
                if (precedence(*b.rhs) <= p) rhs = "(" + rhs + ")";
                return lhs + " " + std::string(op_symbol(b.op)) + " " + rhs;
            },
        },
        expr.node);
}

std::string print(const Bool& condition) {
    return std::visit(overloaded{
                          [](const Compare& c) {
                              return print(*c.lhs) + " " + std::string(op_symbol(c.op)) + " " +
                                     print(*c.rhs);
                          },
                          [](const Not& n) {
                              if (std::holds_alternative<Not>(n.operand->node)) {
                                  return "!" + print(*n.operand);
                              }
                              return "!(" + print(*n.operand) + ")";
                          },
                          [&](const Logical& l) {
                              const int p = precedence(condition);
                              std::string lhs = print(*l.lhs);
                              std::string rhs = print(*l.rhs);
                              if (precedence(*l.lhs) < p) lhs = "(" + lhs + ")";
                              if (precedence(*l.rhs) <= p) rhs = "(" + rhs + ")";
                              return lhs + " " + std::string(op_symbol(l.op)) + " " + rhs;
                          },
                      },
                      condition.node);
}

std::string print(const Clause& clause) {
    std::string s = "if " + print(*clause.condition) + " then anomaly";
    if (clause.category) s += " as \"" + escape(*clause.category) + "\"";
    return s;
}

std::string print(const RuleAst& ast) {
    std::string out;
    for (std::size_t i = 0; i < ast.clauses.size(); ++i) {
        if (i) out += ";\n";
        out += print(ast.clauses[i]);
    }
    return out;
}

}  // namespace tsrules::rule
