#pragma once

#include <string_view>

#include "confdebate/core/types.hpp"

namespace confdebate::confidence {

enum class Method { LN, SV, None };
enum class Granularity { raw, categorical };

struct ConfidenceMode {
    Method method = Method::SV;
    Granularity granularity = Granularity::raw;

    friend bool operator==(const ConfidenceMode&, const ConfidenceMode&) = default;
};

std::string_view to_string(Method m) noexcept;
std::string_view to_string(Granularity g) noexcept;
Method method_from_string(std::string_view s);
Granularity granularity_from_string(std::string_view s);

/// Floor applied to token probabilities before taking logs.
inline constexpr double kMinTokenProb = 1e-12;

/// The answer tokens of a completion. Each entry keeps the emitted token's
/// logprob and its top alternatives so the span can be rescaled later.
struct AnswerTokenSpan {
    core::TokenStream tokens;

    [[nodiscard]] std::size_t size() const noexcept { return tokens.size(); }
    /// exp(logprob) of token i.
    [[nodiscard]] double prob(std::size_t i) const;
};

/// Locates the tokens carrying the "Answer:" value. The span is the minimal
/// token window covering the answer text on its line; when a token
/// straddles the label it is included.
///
/// Throws Error(SpanNotFound) when the label or the answer text cannot be
/// located in the concatenated token text.
AnswerTokenSpan extract_answer_tokens(const core::TokenStream& turn_tokens, std::string_view parsed_answer);

/// Tokens of the last non-empty line; fallback when extraction fails.
AnswerTokenSpan last_line_tokens(const core::TokenStream& turn_tokens);

/// Length-normalized sequence probability (prod p_i)^(1/n), evaluated as
/// exp(mean log p_i) with each p_i floored at kMinTokenProb.
core::ConfidenceScore ln_confidence(const AnswerTokenSpan& span);

/// Verbalized score / 100. Throws Error(MissingConfidence) when absent.
core::ConfidenceScore sv_confidence(const core::ParsedTurn& parsed);

/// Coarse 0..10 scale: half-up rounding of score*10, returned as d/10.
core::ConfidenceScore coarsen_categorical(core::ConfidenceScore score);
int categorical_display(core::ConfidenceScore score);

}  // namespace confdebate::confidence
