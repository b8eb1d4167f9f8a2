#include "confdebate/core/answer.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <regex>

#include "confdebate/core/errors.hpp"
#include "confdebate/core/parse.hpp"

namespace confdebate::core {
namespace {

constexpr double kNumericRelTol = 1e-9;

bool is_punct_tail(char c) {
    return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
}

std::string strip_trailing_punct(std::string s) {
    while (!s.empty() && (is_punct_tail(s.back()) || std::isspace(static_cast<unsigned char>(s.back())))) {
        s.pop_back();
    }
    return s;
}

std::string normalize_free_text(std::string_view raw) {
    return strip_trailing_punct(collapse_whitespace(to_lower_ascii(raw)));
}

// Removes '$' signs, "%" and thousands separators (commas between digits).
std::string clean_numeric_text(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (c == '$' || c == '%') continue;
        if (c == ',' && i > 0 && i + 1 < raw.size() &&
            std::isdigit(static_cast<unsigned char>(raw[i - 1])) &&
            std::isdigit(static_cast<unsigned char>(raw[i + 1]))) {
            continue;
        }
        out.push_back(c);
    }
    return out;
}

const std::string kNumberPattern =
    R"(([-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)(?:\s*/\s*([-+]?(?:\d+(?:\.\d*)?|\.\d+)))?)";

std::optional<double> to_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<double> number_from_match(const std::smatch& m) {
    auto num = to_double(m[1].str());
    if (!num) return std::nullopt;
    if (m[2].matched) {
        auto den = to_double(m[2].str());
        if (!den || *den == 0.0) return std::nullopt;
        return *num / *den;
    }
    return num;
}

// Whole string is one number or fraction.
std::optional<double> parse_number_exact(std::string_view raw) {
    static const std::regex whole("^\\s*" + kNumberPattern + "\\s*\\.?\\s*$");
    const std::string s = clean_numeric_text(raw);
    std::smatch m;
    if (std::regex_match(s, m, whole)) return number_from_match(m);
    return std::nullopt;
}

std::string render_canonical(double v) {
    if (v == 0.0) return "0";
    if (std::abs(v) < 1e15 && std::floor(v) == v) {
        return std::to_string(static_cast<long long>(v));
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

char label_for(std::size_t index) { return static_cast<char>('a' + index); }

std::optional<std::string> in_range_label(char c, std::size_t n_labels) {
    const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower < 'a' || lower > 'z') return std::nullopt;
    if (static_cast<std::size_t>(lower - 'a') >= n_labels) return std::nullopt;
    return std::string(1, lower);
}

std::string normalize_choice(std::string_view raw, std::span<const std::string> choices) {
    const std::size_t n_labels = choices.empty() ? 26 : std::min<std::size_t>(choices.size(), 26);
    const std::string s = trim(raw);

    // Bare label, possibly wrapped: "B", "(b)", "B.", "[C]".
    {
        std::string bare = s;
        auto strip = [](char c) {
            return c == '(' || c == ')' || c == '[' || c == ']' || is_punct_tail(c) ||
                   std::isspace(static_cast<unsigned char>(c)) || c == '*';
        };
        while (!bare.empty() && strip(bare.front())) bare.erase(bare.begin());
        while (!bare.empty() && strip(bare.back())) bare.pop_back();
        if (bare.size() == 1) {
            if (auto l = in_range_label(bare[0], n_labels)) return *l;
        }
    }

    std::smatch m;
    static const std::regex answer_is(R"(answer\s*(?:is|:)?\s*(?:option\s*)?\(?([A-Za-z])\)?(?![A-Za-z]))",
                                      std::regex::icase);
    if (std::regex_search(s, m, answer_is)) {
        if (auto l = in_range_label(m[1].str()[0], n_labels)) return *l;
    }
    static const std::regex parenthesized(R"(\(([A-Z])\))");
    if (std::regex_search(s, m, parenthesized)) {
        if (auto l = in_range_label(m[1].str()[0], n_labels)) return *l;
    }
    static const std::regex leading(R"(^([A-Z])[\).:](\s|$))");
    if (std::regex_search(s, m, leading)) {
        if (auto l = in_range_label(m[1].str()[0], n_labels)) return *l;
    }
    static const std::regex standalone(R"((^|[^A-Za-z0-9])([A-Z])(?![A-Za-z0-9]))");
    std::optional<std::string> last;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), standalone); it != std::sregex_iterator(); ++it) {
        if (auto l = in_range_label((*it)[2].str()[0], n_labels)) last = l;
    }
    if (last) return *last;

    const std::string folded = normalize_free_text(s);
    for (std::size_t i = 0; i < choices.size() && i < 26; ++i) {
        if (normalize_free_text(choices[i]) == folded) return std::string(1, label_for(i));
    }
    return folded;
}

// Returns the index just past the brace group opening at `open`, or npos.
std::size_t match_brace(const std::string& s, std::size_t open) {
    int depth = 0;
    for (std::size_t i = open; i < s.size(); ++i) {
        if (s[i] == '{') ++depth;
        if (s[i] == '}' && --depth == 0) return i + 1;
    }
    return std::string::npos;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
}

// "\cmd{content}" -> "content" for every occurrence.
void unwrap_command(std::string& s, std::string_view cmd) {
    const std::string head = std::string(cmd) + "{";
    for (std::size_t pos = s.find(head); pos != std::string::npos; pos = s.find(head, pos)) {
        const std::size_t open = pos + cmd.size();
        const std::size_t close = match_brace(s, open);
        if (close == std::string::npos) break;
        const std::string inner = s.substr(open + 1, close - open - 2);
        s.replace(pos, close - pos, inner);
    }
}

bool is_atom(const std::string& s) {
    static const std::regex atom(R"(^(-?[A-Za-z0-9.]+|\\[A-Za-z]+)$)");
    return std::regex_match(s, atom);
}

std::string wrap(const std::string& s) { return is_atom(s) ? s : "(" + s + ")"; }

// Reads one \frac argument: a brace group or a single character.
std::optional<std::pair<std::string, std::size_t>> frac_argument(const std::string& s, std::size_t pos) {
    while (pos < s.size() && s[pos] == ' ') ++pos;
    if (pos >= s.size()) return std::nullopt;
    if (s[pos] == '{') {
        const std::size_t close = match_brace(s, pos);
        if (close == std::string::npos) return std::nullopt;
        return std::pair{trim(s.substr(pos + 1, close - pos - 2)), close};
    }
    return std::pair{std::string(1, s[pos]), pos + 1};
}

std::string normalize_latex(std::string_view raw) {
    std::string s(raw);
    unwrap_command(s, "\\boxed");
    unwrap_command(s, "\\fbox");
    s.erase(std::remove(s.begin(), s.end(), '$'), s.end());
    unwrap_command(s, "\\text");
    unwrap_command(s, "\\mathrm");
    replace_all(s, "\\dfrac", "\\frac");
    replace_all(s, "\\tfrac", "\\frac");
    replace_all(s, "\\left", "");
    replace_all(s, "\\right", "");
    replace_all(s, "\\displaystyle", "");
    replace_all(s, "\\!", "");
    replace_all(s, "\\,", " ");
    replace_all(s, "\\;", " ");

    // Innermost-last: rfind visits nested fractions before their parents.
    for (std::size_t pos = s.rfind("\\frac"); pos != std::string::npos; pos = s.rfind("\\frac")) {
        auto num = frac_argument(s, pos + 5);
        if (!num) break;
        auto den = frac_argument(s, num->second);
        if (!den) break;
        s.replace(pos, den->second - pos, wrap(num->first) + "/" + wrap(den->first));
    }
    return trim(collapse_whitespace(s));
}

std::string normalize_or_fallback(std::string_view raw, AnswerKind kind, std::span<const std::string> choices) {
    try {
        return normalize_answer(raw, kind, choices);
    } catch (const Error&) {
        return normalize_free_text(raw);
    }
}

bool numbers_close(double a, double b) {
    if (a == b) return true;
    return std::abs(a - b) <= kNumericRelTol * std::max(std::abs(a), std::abs(b));
}

}  // namespace

std::optional<double> parse_number(std::string_view raw) {
    if (auto exact = parse_number_exact(raw)) return exact;
    static const std::regex any(kNumberPattern);
    const std::string s = clean_numeric_text(raw);
    std::optional<double> last;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), any); it != std::sregex_iterator(); ++it) {
        if (auto v = number_from_match(*it)) last = v;
    }
    return last;
}

std::string normalize_answer(std::string_view raw, AnswerKind kind, std::span<const std::string> choices) {
    switch (kind) {
        case AnswerKind::free_text:
            return normalize_free_text(raw);
        case AnswerKind::numeric: {
            auto v = parse_number(raw);
            if (!v) throw Error(ErrorCode::UnparsableNumeric, "no number in '" + std::string(raw) + "'");
            return render_canonical(*v);
        }
        case AnswerKind::multiple_choice:
            return normalize_choice(raw, choices);
        case AnswerKind::latex_math:
            return normalize_latex(raw);
    }
    return normalize_free_text(raw);
}

bool answers_match(std::string_view a, std::string_view b, AnswerKind kind, std::span<const std::string> choices) {
    if (kind == AnswerKind::numeric) {
        auto va = parse_number(a);
        auto vb = parse_number(b);
        if (va && vb) return numbers_close(*va, *vb);
    }
    const std::string na = normalize_or_fallback(a, kind, choices);
    const std::string nb = normalize_or_fallback(b, kind, choices);
    if (na == nb) return true;
    if (kind == AnswerKind::latex_math) {
        auto va = parse_number_exact(na);
        auto vb = parse_number_exact(nb);
        if (va && vb) return numbers_close(*va, *vb);
    }
    return false;
}

}  // namespace confdebate::core
