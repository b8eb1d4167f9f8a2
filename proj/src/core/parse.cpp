#include "confdebate/core/parse.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <limits>
#include <span>

#include "confdebate/core/errors.hpp"

namespace confdebate::core {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool iequals_prefix(std::string_view text, std::size_t pos, std::string_view word) {
    if (pos + word.size() > text.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[pos + i])) !=
            std::tolower(static_cast<unsigned char>(word[i]))) {
            return false;
        }
    }
    return true;
}

std::span<const std::string_view> label_names(Label label) {
    // Longer aliases first so "Reasoning" is not read as "Reason" + "ing".
    static constexpr std::array<std::string_view, 2> reason{"reasoning", "reason"};
    static constexpr std::array<std::string_view, 1> answer{"answer"};
    static constexpr std::array<std::string_view, 2> confidence{"confidence score", "confidence"};
    switch (label) {
        case Label::reason: return reason;
        case Label::answer: return answer;
        case Label::confidence: return confidence;
    }
    return answer;
}

// Matches `name` [*]* [ \t]* ':' [*]* at pos; returns the value start.
std::optional<std::size_t> match_label_at(std::string_view text, std::size_t pos, Label label) {
    for (std::string_view name : label_names(label)) {
        if (!iequals_prefix(text, pos, name)) continue;
        std::size_t i = pos + name.size();
        while (i < text.size() && (text[i] == '*' || text[i] == ' ' || text[i] == '\t')) ++i;
        if (i < text.size() && text[i] == ':') {
            ++i;
            while (i < text.size() && text[i] == '*') ++i;
            return i;
        }
    }
    return std::nullopt;
}

std::optional<int> first_integer(std::string_view field, bool& negative, bool& truncated,
                                 bool& overflow) {
    negative = truncated = overflow = false;
    auto it = std::find_if(field.begin(), field.end(),
                           [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    if (it == field.end()) return std::nullopt;
    const auto begin = static_cast<std::size_t>(it - field.begin());
    if (begin > 0 && field[begin - 1] == '-') negative = true;
    std::size_t end = begin;
    while (end < field.size() && std::isdigit(static_cast<unsigned char>(field[end]))) ++end;
    if (end + 1 < field.size() && field[end] == '.' &&
        std::isdigit(static_cast<unsigned char>(field[end + 1]))) {
        truncated = true;
    }
    long long value = 0;
    auto [ptr, ec] = std::from_chars(field.data() + begin, field.data() + end, value);
    if (ec == std::errc::result_out_of_range || value > std::numeric_limits<int>::max()) {
        overflow = true;
        return std::numeric_limits<int>::max();
    }
    return static_cast<int>(value);
}

std::string clean_field(std::string_view raw) {
    std::string s = trim(raw);
    // Trailing markdown emphasis left over from "**Answer:** B**".
    while (!s.empty() && s.back() == '*') s.pop_back();
    s = trim(s);
    if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = trim(std::string_view(s).substr(1, s.size() - 2));
    return s;
}

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

std::optional<LabelMatch> find_label(std::string_view text, Label label) {
    // Line-start occurrences.
    std::size_t line = 0;
    while (line <= text.size()) {
        std::size_t i = line;
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '*' ||
                                   text[i] == '#' || text[i] == '_')) {
            ++i;
        }
        if (auto v = match_label_at(text, i, label)) return LabelMatch{i, *v};
        const auto nl = text.find('\n', line);
        if (nl == std::string_view::npos) break;
        line = nl + 1;
    }
    // Inline fallback, e.g. "Reasoning: ... Answer: 14 7".
    for (std::size_t i = 1; i < text.size(); ++i) {
        const char prev = text[i - 1];
        if (std::isalnum(static_cast<unsigned char>(prev)) || prev == '_') continue;
        if (auto v = match_label_at(text, i, label)) return LabelMatch{i, *v};
    }
    return std::nullopt;
}

ParsedTurn parse_turn(std::string_view raw, bool expect_sv_confidence) {
    const auto reason = find_label(raw, Label::reason);
    const auto answer = find_label(raw, Label::answer);
    const auto confidence = find_label(raw, Label::confidence);

    std::array<std::optional<LabelMatch>, 3> all{reason, answer, confidence};
    auto field_text = [&](const LabelMatch& m) {
        std::size_t end = raw.size();
        for (const auto& other : all) {
            if (other && other->label_begin >= m.value_begin) end = std::min(end, other->label_begin);
        }
        return clean_field(raw.substr(m.value_begin, end - m.value_begin));
    };

    ParsedTurn out;
    if (!answer) throw Error(ErrorCode::MissingField, "Answer");
    out.answer = field_text(*answer);
    if (out.answer.empty()) throw Error(ErrorCode::MissingField, "Answer");

    if (reason) {
        out.reason = field_text(*reason);
    } else {
        out.reason = clean_field(raw.substr(0, answer->label_begin));
    }
    if (out.reason.empty()) out.flags.emplace_back(flags::empty_reason);

    if (expect_sv_confidence) {
        if (!confidence) throw Error(ErrorCode::MissingField, "Confidence score");
        const std::string field = field_text(*confidence);
        bool negative = false;
        bool truncated = false;
        bool overflow = false;
        auto value = first_integer(field, negative, truncated, overflow);
        if (!value) throw Error(ErrorCode::MalformedConfidence, "no integer in '" + field + "'");
        if (negative) throw Error(ErrorCode::MalformedConfidence, "negative confidence '" + field + "'");
        if (truncated) out.flags.emplace_back(flags::confidence_truncated);
        if (overflow || *value > 100) {
            value = 100;
            out.flags.emplace_back(flags::confidence_clamped);
        }
        out.sv_confidence = *value;
    }
    return out;
}

std::string render_turn(const ParsedTurn& turn) {
    std::string out = "Reason: " + turn.reason + "\nAnswer: " + turn.answer;
    if (turn.sv_confidence) out += "\nConfidence score: " + std::to_string(*turn.sv_confidence);
    return out;
}

}  // namespace confdebate::core
