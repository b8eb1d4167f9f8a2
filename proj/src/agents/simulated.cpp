#include <algorithm>
#include <cmath>

#include <boost/random/beta_distribution.hpp>

#include "confdebate/agents/agent.hpp"
#include "confdebate/core/answer.hpp"
#include "confdebate/core/errors.hpp"
#include "confdebate/core/parse.hpp"
#include "confdebate/core/seed.hpp"

namespace confdebate::agents {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

core::ConfidenceScore draw_confidence(const SimulatedConfig& cfg, bool correct, core::Rng& rng) {
    const double q = correct ? 0.8 : 0.4;
    const double k = cfg.confidence_sharpness;
    boost::random::beta_distribution<double> beta(k * q + 1.0, k * (1.0 - q) + 1.0);
    const double draw = beta(rng) + cfg.miscalibration_bias;
    return core::ConfidenceScore(std::clamp(draw, 0.0, 1.0));
}

double conf_or_half(const core::DebateTurn& t) { return t.conf_cal ? t.conf_cal->value() : 0.5; }

}  // namespace

Candidates candidate_answers(const core::QuestionRecord& q, int n_distractors) {
    Candidates c;
    if (!q.choices.empty()) {
        const std::string gold = core::normalize_answer(q.gold_answer, core::AnswerKind::multiple_choice, q.choices);
        for (std::size_t i = 0; i < q.choices.size() && i < 26; ++i) {
            const std::string label(1, static_cast<char>('A' + i));
            if (core::to_lower_ascii(label) == gold) c.gold_index = i;
            c.answers.push_back(label);
        }
        if (c.answers.size() < 2) throw Error(ErrorCode::NoCandidateAnswers, "question '" + q.id + "' has one choice");
        return c;
    }
    if (n_distractors <= 0) throw Error(ErrorCode::NoCandidateAnswers, "question '" + q.id + "' has no distractors");
    c.answers.push_back(q.gold_answer);
    const auto gold_value = core::parse_number(q.gold_answer);
    for (int k = 1; k <= n_distractors; ++k) {
        if (q.answer_kind == core::AnswerKind::numeric && gold_value) {
            c.answers.push_back(core::normalize_answer(std::to_string(*gold_value + k), core::AnswerKind::numeric));
        } else {
            c.answers.push_back("distractor " + std::to_string(k));
        }
    }
    return c;
}

SimulatedStep simulated_step(const AgentSpec& agent, const core::QuestionRecord& question,
                             std::span<const core::DebateTurn> history, int round, std::uint64_t rng_seed) {
    const SimulatedConfig& cfg = agent.simulated;
    const Candidates cands = candidate_answers(question, cfg.n_distractors);
    core::Rng rng(rng_seed);

    auto is_correct = [&](const std::string& a) { return core::answers_match(a, question); };
    auto draw_wrong = [&] {
        std::size_t idx = core::uniform_index(rng, cands.answers.size() - 1);
        if (idx >= cands.gold_index) ++idx;
        return cands.answers[idx];
    };

    SimulatedStep step;
    const core::DebateTurn* own = nullptr;
    for (const auto& t : history) {
        if (t.agent_id == agent.agent_id && t.round < round) own = &t;
    }

    if (round == 0 || own == nullptr) {
        const bool correct = core::uniform01(rng) < cfg.base_accuracy;
        step.answer = correct ? cands.answers[cands.gold_index] : draw_wrong();
    } else {
        step.answer = own->answer_raw;
        const double c_self = conf_or_half(*own);
        const core::DebateTurn* best = nullptr;
        for (const auto& t : history) {
            if (t.round != round - 1 || t.agent_id == agent.agent_id) continue;
            if (core::answers_match(t.answer_raw, own->answer_raw, question.answer_kind, question.choices)) continue;
            if (best == nullptr || conf_or_half(t) > conf_or_half(*best)) best = &t;
        }
        const double u = core::uniform01(rng);
        if (best != nullptr) {
            const double gap = conf_or_half(*best) - c_self;
            const double p_switch = gap > 0.0 ? sigmoid(cfg.persuadability * gap) : 0.0;
            if (u < p_switch) {
                step.answer = best->answer_raw;
                step.switched = true;
            }
        }
    }
    step.confidence = draw_confidence(cfg, is_correct(step.answer), rng);
    return step;
}

AgentResponse SimulatedAgent::respond(const AgentRequest& request) {
    const auto& ctx = request.context;
    if (ctx.question == nullptr) throw Error(ErrorCode::BackendUnavailable, "simulated agent needs question metadata");
    const SimulatedStep step = simulated_step(spec(), *ctx.question, ctx.history, ctx.round, request.rng_seed);

    const std::string reason = step.switched ? "After weighing the other arguments, I now agree with " + step.answer + "."
                                             : "Working through the question, I settle on " + step.answer + ".";
    AgentResponse r;
    r.text = "Reason: " + reason + "\nAnswer: " + step.answer;
    if (ctx.confidence_method == confidence::Method::SV) {
        r.text += "\nConfidence score: " + std::to_string(step.confidence.display());
    }
    if (request.need_logprobs) {
        const double p = std::max(step.confidence.value(), confidence::kMinTokenProb);
        core::TokenLogprob answer_token{" " + step.answer, std::log(p), {}};
        answer_token.top_alternatives.push_back({answer_token.token, answer_token.logprob});
        // Remaining mass spread over the other candidates.
        const Candidates cands = candidate_answers(*ctx.question, spec().simulated.n_distractors);
        std::vector<std::string> others;
        for (const auto& a : cands.answers) {
            if (a != step.answer) others.push_back(a);
        }
        const double rest = 1.0 - step.confidence.value();
        if (rest > 0.0 && !others.empty()) {
            const double each = std::log(std::max(rest / static_cast<double>(others.size()), confidence::kMinTokenProb));
            for (const auto& a : others) answer_token.top_alternatives.push_back({" " + a, each});
        }
        r.token_logprobs = core::TokenStream{
            {"Reason:", 0.0, {}}, {" " + reason, 0.0, {}}, {"\n", 0.0, {}}, {"Answer:", 0.0, {}}, answer_token};
    }
    return r;
}

}  // namespace confdebate::agents
