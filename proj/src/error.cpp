#include "tsrules/error.hpp"

namespace tsrules {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::SeriesTooShort: return "SeriesTooShort";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::MissingLabel: return "MissingLabel";
        case ErrorCode::InvalidFractions: return "InvalidFractions";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::Io: return "Io";
        case ErrorCode::WindowTooLarge: return "WindowTooLarge";
        case ErrorCode::MissingClass: return "MissingClass";
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::UnknownIdentifier: return "UnknownIdentifier";
        case ErrorCode::ArityMismatch: return "ArityMismatch";
        case ErrorCode::EmptyRule: return "EmptyRule";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::TransportError: return "TransportError";
        case ErrorCode::RetriesExhausted: return "RetriesExhausted";
        case ErrorCode::MalformedResponse: return "MalformedResponse";
        case ErrorCode::NoStructuredObject: return "NoStructuredObject";
        case ErrorCode::InvalidLabelValue: return "InvalidLabelValue";
        case ErrorCode::EmptyReason: return "EmptyReason";
        case ErrorCode::EmptyReasonCorpus: return "EmptyReasonCorpus";
        case ErrorCode::NoDiscriminativeFeature: return "NoDiscriminativeFeature";
        case ErrorCode::PrototypeUnparseable: return "PrototypeUnparseable";
        case ErrorCode::ModificationUnparseable: return "ModificationUnparseable";
        case ErrorCode::UnknownSampleId: return "UnknownSampleId";
        case ErrorCode::InitialRuleUnparseable: return "InitialRuleUnparseable";
        case ErrorCode::IncompleteAssignment: return "IncompleteAssignment";
    }
    return "Unknown";
}

std::optional<ErrorCode> parse_error_code(std::string_view name) noexcept {
    for (int i = 0; i <= static_cast<int>(ErrorCode::IncompleteAssignment); ++i) {
        if (to_string(static_cast<ErrorCode>(i)) == name) return static_cast<ErrorCode>(i);
    }
    return std::nullopt;
}

}  // namespace tsrules
