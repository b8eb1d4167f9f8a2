#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "confdebate/core/types.hpp"

namespace confdebate::core {

/// Location of a structured-output label ("Reason:", "Answer:", ...) in a
/// completion. `value_begin` is the first character after the colon.
struct LabelMatch {
    std::size_t label_begin = 0;
    std::size_t value_begin = 0;
};

enum class Label { reason, answer, confidence };

/// Finds a label in `text`. Occurrences at a line start (after optional
/// whitespace and markdown emphasis) win; otherwise the first inline
/// occurrence preceded by whitespace or punctuation is accepted.
std::optional<LabelMatch> find_label(std::string_view text, Label label);

/// Extracts reason / answer / (optionally) verbalized confidence from an
/// agent completion written in the Reason/Answer/Confidence score format.
///
/// Throws Error(MissingField) when a required label is absent and
/// Error(MalformedConfidence) when the confidence field holds no usable
/// integer. Values above 100 clamp to 100 and decimals truncate; both are
/// recorded in ParsedTurn::flags.
ParsedTurn parse_turn(std::string_view raw, bool expect_sv_confidence);

/// Renders a ParsedTurn in the structured output format (inverse of
/// parse_turn).
std::string render_turn(const ParsedTurn& turn);

// String helpers shared across modules.
std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
std::string collapse_whitespace(std::string_view s);

}  // namespace confdebate::core
