#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace confdebate::core {

enum class AnswerKind { free_text, numeric, multiple_choice, latex_math };

std::string_view to_string(AnswerKind kind) noexcept;
AnswerKind answer_kind_from_string(std::string_view s);

/// One benchmark item.
struct QuestionRecord {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::vector<std::string> choices;
    AnswerKind answer_kind = AnswerKind::free_text;
};

/// A probability in [0,1]. Construction from anything outside that range
/// (or NaN) throws InvalidConfidence.
class ConfidenceScore {
public:
    ConfidenceScore() = default;
    explicit ConfidenceScore(double value);

    [[nodiscard]] double value() const noexcept { return value_; }
    /// round(value * 100), in [0,100].
    [[nodiscard]] int display() const noexcept;

    friend bool operator==(ConfidenceScore, ConfidenceScore) = default;

private:
    double value_ = 0.0;
};

struct TokenAlternative {
    std::string token;
    double logprob = 0.0;

    friend bool operator==(const TokenAlternative&, const TokenAlternative&) = default;
};

/// One emitted token with its log-probability and the backend's top
/// alternatives at that position.
struct TokenLogprob {
    std::string token;
    double logprob = 0.0;
    std::vector<TokenAlternative> top_alternatives;

    friend bool operator==(const TokenLogprob&, const TokenLogprob&) = default;
};

using TokenStream = std::vector<TokenLogprob>;

/// Quality flags attached to a turn when a fallback path was taken.
namespace flags {
inline constexpr std::string_view empty_reason = "empty_reason";
inline constexpr std::string_view confidence_clamped = "confidence_clamped";
inline constexpr std::string_view confidence_truncated = "confidence_truncated";
inline constexpr std::string_view sv_default = "sv_confidence_default";
inline constexpr std::string_view answer_fallback = "answer_fallback";
inline constexpr std::string_view span_fallback = "span_fallback";
inline constexpr std::string_view parse_retried = "parse_retried";
}  // namespace flags

struct DebateTurn {
    std::string agent_id;
    int round = 0;
    std::string reason;
    std::string answer_raw;
    std::string answer_norm;
    /// Absent when the debate runs without confidence.
    std::optional<ConfidenceScore> conf_raw;
    std::optional<ConfidenceScore> conf_cal;
    /// Full completion token stream (LN mode only).
    std::optional<TokenStream> token_logprobs;
    /// Tokens forming the answer span the LN score was computed from.
    std::optional<TokenStream> answer_tokens;
    std::vector<std::string> flags;

    [[nodiscard]] bool has_flag(std::string_view flag) const;
};

enum class SelectionPolicy { argmax_confidence, majority_vote };

std::string_view to_string(SelectionPolicy p) noexcept;
SelectionPolicy selection_policy_from_string(std::string_view s);

enum class TranscriptStatus { completed, failed };

struct DebateTranscript {
    std::string question_id;
    std::string config_digest;
    std::vector<DebateTurn> turns;
    int n_agents = 0;
    int n_rounds = 0;
    std::string final_answer;
    std::optional<std::string> final_answer_agent;
    SelectionPolicy selection_policy = SelectionPolicy::argmax_confidence;
    std::uint64_t rng_seed = 0;
    TranscriptStatus status = TranscriptStatus::completed;
    std::string error;

    /// Turns of one round, in speaking order.
    [[nodiscard]] std::vector<const DebateTurn*> round_turns(int round) const;
};

struct ParsedTurn {
    std::string reason;
    std::string answer;
    std::optional<int> sv_confidence;
    std::vector<std::string> flags;
};

}  // namespace confdebate::core
