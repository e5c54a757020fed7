#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tsrules {

// Typed domain failures. The CLI maps every Error to exit code 1.
enum class ErrorCode {
    // core-data
    MalformedRecord,
    DuplicateId,
    SeriesTooShort,
    NonFiniteValue,
    MissingLabel,
    InvalidFractions,
    EmptyDataset,
    InvalidConfig,
    Io,
    // features
    WindowTooLarge,
    MissingClass,
    // rule-dsl
    SyntaxError,
    UnknownIdentifier,
    ArityMismatch,
    EmptyRule,
    // llm-bridge
    Timeout,
    TransportError,
    RetriesExhausted,
    MalformedResponse,
    NoStructuredObject,
    InvalidLabelValue,
    EmptyReason,
    EmptyReasonCorpus,
    NoDiscriminativeFeature,
    PrototypeUnparseable,
    ModificationUnparseable,
    // labeling
    UnknownSampleId,
    // refine
    InitialRuleUnparseable,
    // augment
    IncompleteAssignment,
};

std::string_view to_string(ErrorCode code) noexcept;
std::optional<ErrorCode> parse_error_code(std::string_view name) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Parse failures carry a 1-based source position.
class ParseError : public Error {
public:
    ParseError(ErrorCode code, const std::string& message, int line, int column)
        : Error(code, message + " at line " + std::to_string(line) + ", column " +
                          std::to_string(column)),
          line_(line),
          column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace tsrules
