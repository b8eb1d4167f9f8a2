#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "confdebate/core/types.hpp"

namespace confdebate::core {

/// Canonical form of an answer for comparison. The chain is fixed per kind:
///  - free_text: case-folded, whitespace collapsed, trailing punctuation cut
///  - numeric: canonical decimal ("1,234" -> "1234", "1/2" -> "0.5")
///  - multiple_choice: the bare option label, lower-case
///  - latex_math: \boxed{} and $ stripped, \frac{a}{b} -> a/b, spaces collapsed
///
/// `choices` bounds the admissible option labels for multiple_choice and
/// lets an answer given as the option text map to its label.
///
/// Throws Error(UnparsableNumeric) for numeric input without a number.
std::string normalize_answer(std::string_view raw, AnswerKind kind,
                             std::span<const std::string> choices = {});

/// Numeric value of an answer string ("1,234", "$5", "-3/4", "2.5e3").
std::optional<double> parse_number(std::string_view raw);

/// Equality under normalize_answer; numeric answers also match when both
/// sides parse to numbers equal within relative tolerance 1e-9. Never
/// throws: unparsable values fall back to free-text comparison.
bool answers_match(std::string_view a, std::string_view b, AnswerKind kind,
                   std::span<const std::string> choices = {});

inline bool answers_match(std::string_view answer, const QuestionRecord& q) {
    return answers_match(answer, q.gold_answer, q.answer_kind, q.choices);
}

}  // namespace confdebate::core
