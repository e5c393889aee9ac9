#pragma once
// Error taxonomy shared by every genaiops module. Each failure carries a
// machine-checkable code plus a human message; the CLI maps codes to exit
// codes (usage/config vs internal).

#include <stdexcept>
#include <string>

namespace genaiops {

enum class ErrorCode {
    // suite
    DuplicateId,
    MalformedRecord,
    MissingReferences,
    UnresolvedPlaceholder,
    MissingDemoSlot,
    // adapters
    Timeout,
    EndpointError,
    CacheMiss,
    ConfigError,
    CapabilityMissing,
    EmptyReference,
    // metrics
    EmptyReferences,
    EmptySource,
    EmptyText,
    ApplicabilityError,
    // safety
    LexiconMissing,
    SpanOutOfRange,
    // fairness
    DegenerateGroup,
    NoFeasibleMix,
    LengthMismatch,
    // optimizer
    EmptyProposal,
    EmptyEvalSet,
    EmptySuite,
    // pipeline
    IncomparableRuns,
    StoreWriteError,
    Internal,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::MissingReferences: return "MissingReferences";
        case ErrorCode::UnresolvedPlaceholder: return "UnresolvedPlaceholder";
        case ErrorCode::MissingDemoSlot: return "MissingDemoSlot";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::EndpointError: return "EndpointError";
        case ErrorCode::CacheMiss: return "CacheMiss";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::CapabilityMissing: return "CapabilityMissing";
        case ErrorCode::EmptyReference: return "EmptyReference";
        case ErrorCode::EmptyReferences: return "EmptyReferences";
        case ErrorCode::EmptySource: return "EmptySource";
        case ErrorCode::EmptyText: return "EmptyText";
        case ErrorCode::ApplicabilityError: return "ApplicabilityError";
        case ErrorCode::LexiconMissing: return "LexiconMissing";
        case ErrorCode::SpanOutOfRange: return "SpanOutOfRange";
        case ErrorCode::DegenerateGroup: return "DegenerateGroup";
        case ErrorCode::NoFeasibleMix: return "NoFeasibleMix";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptyProposal: return "EmptyProposal";
        case ErrorCode::EmptyEvalSet: return "EmptyEvalSet";
        case ErrorCode::EmptySuite: return "EmptySuite";
        case ErrorCode::IncomparableRuns: return "IncomparableRuns";
        case ErrorCode::StoreWriteError: return "StoreWriteError";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace genaiops
