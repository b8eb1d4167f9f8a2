#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace confdebate {

enum class ErrorCode {
    MissingField,
    MalformedConfidence,
    UnparsableNumeric,
    InvalidConfidence,
    SpanNotFound,
    MissingConfidence,
    DegenerateData,
    IncompatibleCalibrator,
    Format,
    Io,
    BackendUnavailable,
    LogprobsUnsupported,
    NoCandidateAnswers,
    MoreThanTwoAgents,
    EmptyInput,
    Config,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-checkable error kind; `what()` holds the
/// human-readable detail.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace confdebate
