#pragma once

#include <string>
#include <string_view>

#include "tsrules/rule_ast.hpp"

namespace tsrules::rule {

// Grammar:
//   rule     := clause (";" clause)*
//   clause   := "if" bexpr "then" "anomaly" ("as" STRING)?
//   bexpr    := bterm ("||" bterm)*
//   bterm    := bfac ("&&" bfac)*
//   bfac     := "!" bfac | "(" bexpr ")" | cmp
//   cmp      := aexpr (">=" | "<=" | ">" | "<" | "==" | "!=") aexpr
//   aexpr    := term (("+"|"-") term)*
//   term     := fac (("*"|"/") fac)*
//   fac      := NUMBER | "-" NUMBER | IDENT | "values" "[" SIGNED_INT "]"
//             | IDENT "(" aexpr ("," aexpr)* ")" | "(" aexpr ")"
//
// Throws ParseError (SyntaxError, UnknownIdentifier, ArityMismatch, EmptyRule).
RuleAst parse(std::string_view text);

// Canonical text: one clause per line, lines joined by ";\n". parse(print(a)) == a.
std::string print(const RuleAst& ast);
std::string print(const Clause& clause);
std::string print(const Bool& condition);
std::string print(const Arith& expr);

// Shortest round-trip decimal form, e.g. 80, 0.5, 1e+12.
std::string format_number(double value);

}  // namespace tsrules::rule
