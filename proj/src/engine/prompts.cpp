#include <string>

#include "confdebate/confidence/confidence.hpp"
#include "confdebate/engine/engine.hpp"

namespace confdebate::engine {
namespace {

constexpr std::string_view kLnInitSystem =
    "You are {debater}, a helpful AI assistant. You are now required to answer a question given by the user.\n"
    "Please give your reasoning for the question, and give your answer to the question.\n"
    "Please output in the following format strictly:\n"
    "Reason: [your reason for the answer here]\n"
    "Answer: [your answer here, only the answer]";

constexpr std::string_view kLnDebateSystem =
    "You are {debater}, a debater. You are now required to answer a question given by the user and debate with "
    "other debaters about the answer. PAY SPECIAL ATTENTION to these confidence scores as they reflect the "
    "reliability and conviction of each debater. If the confidence score is low, it may indicate uncertainty in "
    "the debater's answer. Please evaluate it further in this case. Then, formulate your debate arguments and "
    "provide your answer to the question.\n"
    "Please output in the following format strictly:\n"
    "Reason: [your debate arguments here]\n"
    "Answer: [your answer here, only the answer]";

constexpr std::string_view kNoConfDebateSystem =
    "You are {debater}, a debater. You are now required to answer a question given by the user and debate with "
    "other debaters about the answer. Then, formulate your debate arguments and provide your answer to the "
    "question.\n"
    "Please output in the following format strictly:\n"
    "Reason: [your debate arguments here]\n"
    "Answer: [your answer here, only the answer]";

constexpr std::string_view kSvInitSystem =
    "You are {debater}, a helpful AI assistant. You are now required to answer a question given by the user.\n"
    "Please provide a clear reasoning for your answer, followed by your answer to the question.\n"
    "It is crucial to also include your confidence score, which reflects how strongly you believe your answer is "
    "correct.\n"
    "Consider the confidence score carefully as it represents the likelihood of your answer being accurate.\n"
    "Please output in the following format strictly:\n"
    "Reason: [your reason for the answer here]\n"
    "Answer: [your answer here, only the answer]\n"
    "Confidence score: [your confidence score only, 0-100]";

constexpr std::string_view kSvDebateSystem =
    "You are {debater}, a debater. You are now required to answer a question given by the user and debate with "
    "other debaters about the answer.\n"
    "PAY SPECIAL ATTENTION to these confidence scores as they reflect the reliability and conviction of each "
    "debater's argument.\n"
    "If the confidence score is low, it may indicate uncertainty in the debater's answer. Please evaluate it "
    "further in this case.\n"
    "Then, formulate your debate arguments and provide your answer to the question.\n"
    "Finally, include your confidence score, which is a critical measure of how strongly you believe your answer "
    "is correct.\n"
    "Please output in the following format strictly:\n"
    "Reason: [your debate arguments here]\n"
    "Answer: [your answer here, only the answer]\n"
    "Confidence score: [your confidence score only, 0-100]";

constexpr std::string_view kInitUser = "Question: {question}";
constexpr std::string_view kDebateUser = "Question: {question}\nDebate history: {debate_history}";

// Single pass, so substituted text is never rescanned for placeholders.
std::string substitute(std::string_view tmpl, std::string_view debater, std::string_view question,
                       std::string_view history) {
    std::string out;
    out.reserve(tmpl.size() + question.size() + history.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i);
            if (close != std::string_view::npos) {
                const auto key = tmpl.substr(i + 1, close - i - 1);
                if (key == "debater" || key == "question" || key == "debate_history") {
                    out += key == "debater" ? debater : key == "question" ? question : history;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

}  // namespace

std::string render_question(const core::QuestionRecord& question) {
    std::string out = question.question;
    for (std::size_t i = 0; i < question.choices.size() && i < 26; ++i) {
        out += "\n(" + std::string(1, static_cast<char>('A' + i)) + ") " + question.choices[i];
    }
    return out;
}

PromptBundle build_prompt(const agents::AgentSpec& agent, const DebateConfig& cfg,
                          const core::QuestionRecord& question, std::optional<std::string_view> history, int round) {
    using confidence::Method;
    const Method method = cfg.confidence_mode.method;
    const bool init = round == 0;
    std::string_view system;
    if (method == Method::SV) {
        system = init ? kSvInitSystem : kSvDebateSystem;
    } else if (method == Method::LN) {
        system = init ? kLnInitSystem : kLnDebateSystem;
    } else {
        system = init ? kLnInitSystem : kNoConfDebateSystem;
    }
    const std::string& name = agent.display_name.empty() ? agent.agent_id : agent.display_name;
    const std::string q = render_question(question);
    const std::string_view h = history.value_or("");
    return PromptBundle{substitute(system, name, q, h), substitute(init ? kInitUser : kDebateUser, name, q, h)};
}

std::string format_reminder(confidence::Method method) {
    std::string out =
        "\n\nYour previous reply did not follow the required format. Please output in the following format "
        "strictly:\nReason: [your reason for the answer here]\nAnswer: [your answer here, only the answer]";
    if (method == confidence::Method::SV) out += "\nConfidence score: [your confidence score only, 0-100]";
    return out;
}

int display_confidence(core::ConfidenceScore score, confidence::Granularity granularity) {
    return granularity == confidence::Granularity::categorical ? confidence::categorical_display(score)
                                                               : score.display();
}

std::string render_history(std::span<const core::DebateTurn> turns, const DebateConfig& cfg) {
    std::string out;
    for (const auto& t : turns) {
        const agents::AgentSpec* spec = cfg.find_agent(t.agent_id);
        const std::string& name = spec && !spec->display_name.empty() ? spec->display_name : t.agent_id;
        if (!out.empty()) out += "\n\n";
        out += "[" + name + ", Round " + std::to_string(t.round) + "]\nReason: " + t.reason + "\nAnswer: " + t.answer_raw;
        if (cfg.confidence_mode.method != confidence::Method::None && t.conf_cal) {
            out += "\nConfidence: " + std::to_string(display_confidence(*t.conf_cal, cfg.confidence_mode.granularity));
        }
    }
    return out;
}

}  // namespace confdebate::engine
