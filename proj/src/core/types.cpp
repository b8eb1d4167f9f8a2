#include "confdebate/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "confdebate/core/errors.hpp"

namespace confdebate {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingField: return "MissingField";
        case ErrorCode::MalformedConfidence: return "MalformedConfidence";
        case ErrorCode::UnparsableNumeric: return "UnparsableNumeric";
        case ErrorCode::InvalidConfidence: return "InvalidConfidence";
        case ErrorCode::SpanNotFound: return "SpanNotFound";
        case ErrorCode::MissingConfidence: return "MissingConfidence";
        case ErrorCode::DegenerateData: return "DegenerateData";
        case ErrorCode::IncompatibleCalibrator: return "IncompatibleCalibrator";
        case ErrorCode::Format: return "FormatError";
        case ErrorCode::Io: return "IoError";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::LogprobsUnsupported: return "LogprobsUnsupported";
        case ErrorCode::NoCandidateAnswers: return "NoCandidateAnswers";
        case ErrorCode::MoreThanTwoAgents: return "MoreThanTwoAgents";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::Config: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace confdebate

namespace confdebate::core {

std::string_view to_string(AnswerKind kind) noexcept {
    switch (kind) {
        case AnswerKind::free_text: return "free_text";
        case AnswerKind::numeric: return "numeric";
        case AnswerKind::multiple_choice: return "multiple_choice";
        case AnswerKind::latex_math: return "latex_math";
    }
    return "free_text";
}

AnswerKind answer_kind_from_string(std::string_view s) {
    if (s == "free_text") return AnswerKind::free_text;
    if (s == "numeric") return AnswerKind::numeric;
    if (s == "multiple_choice") return AnswerKind::multiple_choice;
    if (s == "latex_math") return AnswerKind::latex_math;
    throw Error(ErrorCode::Format, "unknown answer kind '" + std::string(s) + "'");
}

ConfidenceScore::ConfidenceScore(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw Error(ErrorCode::InvalidConfidence,
                    "confidence " + std::to_string(value) + " outside [0,1]");
    }
}

int ConfidenceScore::display() const noexcept {
    return static_cast<int>(std::lround(value_ * 100.0));
}

bool DebateTurn::has_flag(std::string_view flag) const {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

std::string_view to_string(SelectionPolicy p) noexcept {
    return p == SelectionPolicy::argmax_confidence ? "argmax_confidence" : "majority_vote";
}

SelectionPolicy selection_policy_from_string(std::string_view s) {
    if (s == "argmax_confidence" || s == "argmax") return SelectionPolicy::argmax_confidence;
    if (s == "majority_vote" || s == "majority") return SelectionPolicy::majority_vote;
    throw Error(ErrorCode::Format, "unknown selection policy '" + std::string(s) + "'");
}

std::vector<const DebateTurn*> DebateTranscript::round_turns(int round) const {
    std::vector<const DebateTurn*> out;
    for (const auto& t : turns) {
        if (t.round == round) out.push_back(&t);
    }
    return out;
}

}  // namespace confdebate::core
