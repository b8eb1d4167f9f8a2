#include "confdebate/confidence/confidence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "confdebate/core/errors.hpp"
#include "confdebate/core/parse.hpp"

namespace confdebate::confidence {

using core::ConfidenceScore;

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::LN: return "ln";
        case Method::SV: return "sv";
        case Method::None: return "none";
    }
    return "none";
}

std::string_view to_string(Granularity g) noexcept {
    return g == Granularity::raw ? "raw" : "categorical";
}

Method method_from_string(std::string_view s) {
    const std::string lower = core::to_lower_ascii(s);
    if (lower == "ln") return Method::LN;
    if (lower == "sv") return Method::SV;
    if (lower == "none" || lower == "no_conf" || lower == "noconf") return Method::None;
    throw Error(ErrorCode::Format, "unknown confidence mode '" + std::string(s) + "'");
}

Granularity granularity_from_string(std::string_view s) {
    if (s == "raw") return Granularity::raw;
    if (s == "categorical") return Granularity::categorical;
    throw Error(ErrorCode::Format, "unknown confidence granularity '" + std::string(s) + "'");
}

double AnswerTokenSpan::prob(std::size_t i) const { return std::exp(tokens.at(i).logprob); }

namespace {

struct Joined {
    std::string text;
    std::vector<std::size_t> offsets;  // start offset of each token
};

Joined join_tokens(const core::TokenStream& tokens) {
    Joined j;
    j.offsets.reserve(tokens.size());
    for (const auto& t : tokens) {
        j.offsets.push_back(j.text.size());
        j.text += t.token;
    }
    return j;
}

AnswerTokenSpan covering(const core::TokenStream& tokens, const Joined& j, std::size_t begin, std::size_t end) {
    AnswerTokenSpan span;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::size_t tb = j.offsets[i];
        const std::size_t te = tb + tokens[i].token.size();
        if (te > tb && tb < end && te > begin) span.tokens.push_back(tokens[i]);
    }
    return span;
}

}  // namespace

AnswerTokenSpan extract_answer_tokens(const core::TokenStream& turn_tokens, std::string_view parsed_answer) {
    const Joined j = join_tokens(turn_tokens);
    const auto label = core::find_label(j.text, core::Label::answer);
    if (!label) throw Error(ErrorCode::SpanNotFound, "no Answer label in token stream");

    std::string answer = core::trim(parsed_answer);
    if (const auto nl = answer.find('\n'); nl != std::string::npos) answer = core::trim(answer.substr(0, nl));
    if (answer.empty()) throw Error(ErrorCode::SpanNotFound, "empty answer");

    std::size_t value = label->value_begin;
    while (value < j.text.size() && std::isspace(static_cast<unsigned char>(j.text[value]))) ++value;
    std::size_t line_end = j.text.find('\n', value);
    if (line_end == std::string::npos) line_end = j.text.size();

    const std::size_t pos = j.text.find(answer, value);
    if (pos == std::string::npos || pos + answer.size() > line_end) {
        throw Error(ErrorCode::SpanNotFound, "answer '" + answer + "' not on the Answer line");
    }
    AnswerTokenSpan span = covering(turn_tokens, j, pos, pos + answer.size());
    if (span.tokens.empty()) throw Error(ErrorCode::SpanNotFound, "answer covers no tokens");
    return span;
}

AnswerTokenSpan last_line_tokens(const core::TokenStream& turn_tokens) {
    const Joined j = join_tokens(turn_tokens);
    std::size_t end = j.text.size();
    while (end > 0 && std::isspace(static_cast<unsigned char>(j.text[end - 1]))) --end;
    const std::size_t nl = j.text.rfind('\n', end == 0 ? 0 : end - 1);
    const std::size_t begin = nl == std::string::npos ? 0 : nl + 1;
    AnswerTokenSpan span = covering(turn_tokens, j, begin, end);
    if (span.tokens.empty() && !turn_tokens.empty()) span.tokens.push_back(turn_tokens.back());
    if (span.tokens.empty()) throw Error(ErrorCode::SpanNotFound, "empty token stream");
    return span;
}

ConfidenceScore ln_confidence(const AnswerTokenSpan& span) {
    if (span.tokens.empty()) throw Error(ErrorCode::SpanNotFound, "empty answer span");
    double sum = 0.0;
    for (const auto& t : span.tokens) {
        sum += std::max(t.logprob, std::log(kMinTokenProb));
    }
    const double mean = std::min(sum / static_cast<double>(span.tokens.size()), 0.0);
    return ConfidenceScore(std::exp(mean));
}

ConfidenceScore sv_confidence(const core::ParsedTurn& parsed) {
    if (!parsed.sv_confidence) throw Error(ErrorCode::MissingConfidence, "no verbalized confidence");
    return ConfidenceScore(std::clamp(*parsed.sv_confidence, 0, 100) / 100.0);
}

int categorical_display(ConfidenceScore score) {
    return static_cast<int>(std::floor(score.value() * 100.0 / 10.0 + 0.5));
}

ConfidenceScore coarsen_categorical(ConfidenceScore score) {
    return ConfidenceScore(categorical_display(score) / 10.0);
}

}  // namespace confdebate::confidence
