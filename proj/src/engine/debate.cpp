#include <algorithm>
#include <future>
#include <set>

#include "confdebate/core/answer.hpp"
#include "confdebate/core/errors.hpp"
#include "confdebate/core/parse.hpp"
#include "confdebate/engine/engine.hpp"

namespace confdebate::engine {

using core::DebateTurn;

std::string_view to_string(DebateMode m) noexcept { return m == DebateMode::one_by_one ? "one_by_one" : "broadcast"; }

DebateMode debate_mode_from_string(std::string_view s) {
    if (s == "one_by_one") return DebateMode::one_by_one;
    if (s == "broadcast") return DebateMode::broadcast;
    throw Error(ErrorCode::Config, "unknown debate mode '" + std::string(s) + "'");
}

const agents::AgentSpec* DebateConfig::find_agent(std::string_view agent_id) const {
    for (const auto& a : agents) {
        if (a.agent_id == agent_id) return &a;
    }
    return nullptr;
}

void DebateConfig::validate() const {
    if (agents.empty()) throw Error(ErrorCode::Config, "a debate needs at least one agent");
    if (rounds < 0) throw Error(ErrorCode::Config, "rounds must be >= 0");
    if (sv_parse_retries < 0) throw Error(ErrorCode::Config, "sv_parse_retries must be >= 0");
    std::set<std::string> ids;
    for (const auto& a : agents) {
        a.validate();
        if (!ids.insert(a.agent_id).second) throw Error(ErrorCode::Config, "duplicate agent id '" + a.agent_id + "'");
    }
    for (const auto& [id, cal] : calibrators) {
        if (!ids.contains(id)) throw Error(ErrorCode::Config, "calibrator for unknown agent '" + id + "'");
    }
    if (confidence_mode.method == confidence::Method::None) return;
    if (calibration_method == calibration::Method::temperature && confidence_mode.method != confidence::Method::LN) {
        throw Error(ErrorCode::Config, "temperature calibration requires LN confidence");
    }
    if (calibration_method == calibration::Method::vanilla) return;
    for (const auto& a : agents) {
        const auto it = calibrators.find(a.agent_id);
        if (it == calibrators.end()) {
            throw Error(ErrorCode::Config, "no " + std::string(calibration::to_string(calibration_method)) +
                                               " calibrator for agent '" + a.agent_id + "'");
        }
        if (it->second.method() != calibration_method) {
            throw Error(ErrorCode::Config, "calibrator for agent '" + a.agent_id + "' uses method " +
                                               std::string(calibration::to_string(it->second.method())));
        }
    }
}

namespace {

std::vector<std::shared_ptr<agents::Agent>> build_agents(const DebateConfig& cfg) {
    std::vector<std::shared_ptr<agents::Agent>> out;
    for (const auto& spec : cfg.agents) out.push_back(agents::make_agent(spec));
    return out;
}

std::string normalize_lenient(std::string_view answer, const core::QuestionRecord& q) {
    try {
        return core::normalize_answer(answer, q.answer_kind, q.choices);
    } catch (const Error&) {
        return core::normalize_answer(answer, core::AnswerKind::free_text);
    }
}

std::string last_nonempty_line(std::string_view text) {
    std::string best;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        std::string line = core::trim(text.substr(start, nl - start));
        if (!line.empty()) best = std::move(line);
        start = nl + 1;
    }
    return best;
}

bool is_parse_error(const Error& e) {
    return e.code() == ErrorCode::MissingField || e.code() == ErrorCode::MalformedConfidence;
}

}  // namespace

DebateEngine::DebateEngine(DebateConfig cfg, std::vector<std::shared_ptr<agents::Agent>> agents,
                           std::string config_digest)
    : cfg_(std::move(cfg)), agents_(std::move(agents)), config_digest_(std::move(config_digest)) {
    cfg_.validate();
    if (agents_.size() != cfg_.agents.size()) throw Error(ErrorCode::Config, "agent list does not match config");
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        if (!agents_[i] || agents_[i]->spec().agent_id != cfg_.agents[i].agent_id) {
            throw Error(ErrorCode::Config, "agent order does not match config");
        }
    }
}

DebateEngine::DebateEngine(DebateConfig cfg, std::string config_digest)
    : DebateEngine(cfg, build_agents(cfg), std::move(config_digest)) {}

DebateTurn DebateEngine::make_turn(std::size_t agent_index, const core::QuestionRecord& question,
                                   std::span<const DebateTurn> history, int round) const {
    using confidence::Method;
    const agents::AgentSpec& spec = cfg_.agents[agent_index];
    const Method method = cfg_.confidence_mode.method;
    const std::uint64_t qseed = core::question_seed(cfg_.global_seed, question.id);

    std::optional<std::string> rendered;
    if (round > 0) rendered = render_history(history, cfg_);
    const PromptBundle prompt = build_prompt(spec, cfg_, question, rendered, round);

    DebateTurn turn;
    turn.agent_id = spec.agent_id;
    turn.round = round;

    agents::AgentResponse response;
    std::optional<core::ParsedTurn> parsed;
    for (int attempt = 0; attempt <= cfg_.sv_parse_retries && !parsed; ++attempt) {
        agents::AgentRequest req;
        req.system_prompt = prompt.system;
        req.user_prompt = attempt == 0 ? prompt.user : prompt.user + format_reminder(method);
        req.need_logprobs = method == Method::LN;
        req.rng_seed = core::mix_seed({qseed, static_cast<std::uint64_t>(round), agent_index,
                                       static_cast<std::uint64_t>(attempt)});
        req.context = {&question, history, round, method, attempt};
        if (observer_) observer_({question.id, agent_index, round, attempt, {req.system_prompt, req.user_prompt}, history.size()});

        response = agents_[agent_index]->respond(req);
        try {
            parsed = core::parse_turn(response.text, method == Method::SV);
        } catch (const Error& e) {
            if (!is_parse_error(e)) throw;
        }
        if (attempt > 0) turn.flags.emplace_back(core::flags::parse_retried);
    }

    if (!parsed) {
        // Out of retries: keep the answer if there is one, default the rest.
        try {
            parsed = core::parse_turn(response.text, false);
        } catch (const Error&) {
            parsed = core::ParsedTurn{};
            parsed->answer = last_nonempty_line(response.text);
            parsed->reason = "";
            turn.flags.emplace_back(core::flags::answer_fallback);
        }
        if (method == Method::SV) turn.flags.emplace_back(core::flags::sv_default);
    }
    for (auto& f : parsed->flags) turn.flags.push_back(f);

    turn.reason = parsed->reason;
    turn.answer_raw = parsed->answer;
    turn.answer_norm = normalize_lenient(turn.answer_raw, question);

    if (method == Method::SV) {
        turn.conf_raw = parsed->sv_confidence ? confidence::sv_confidence(*parsed) : core::ConfidenceScore(0.5);
    } else if (method == Method::LN) {
        if (!response.token_logprobs) throw Error(ErrorCode::LogprobsUnsupported, "agent '" + spec.agent_id + "'");
        confidence::AnswerTokenSpan span;
        try {
            span = confidence::extract_answer_tokens(*response.token_logprobs, turn.answer_raw);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SpanNotFound) throw;
            span = confidence::last_line_tokens(*response.token_logprobs);
            turn.flags.emplace_back(core::flags::span_fallback);
        }
        turn.conf_raw = confidence::ln_confidence(span);
        turn.answer_tokens = span.tokens;
        turn.token_logprobs = std::move(response.token_logprobs);
    }

    if (turn.conf_raw) {
        const auto it = cfg_.calibrators.find(spec.agent_id);
        const calibration::Calibrator identity = calibration::Calibrator::vanilla();
        const calibration::Calibrator& cal = it == cfg_.calibrators.end() ? identity : it->second;
        turn.conf_cal = calibration::calibrate(cal, turn, cfg_.confidence_mode.granularity);
    }
    return turn;
}

std::vector<DebateTurn> DebateEngine::run_initial_round(const core::QuestionRecord& question) const {
    std::vector<DebateTurn> turns;
    turns.reserve(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) turns.push_back(make_turn(i, question, {}, 0));
    return turns;
}

std::vector<DebateTurn> DebateEngine::run_debate_round(const core::QuestionRecord& question,
                                                       std::span<const DebateTurn> history, int round) const {
    if (round < 1) throw Error(ErrorCode::Config, "debate rounds start at 1");
    std::vector<DebateTurn> out;
    out.reserve(agents_.size());
    if (cfg_.mode == DebateMode::one_by_one) {
        std::vector<DebateTurn> running(history.begin(), history.end());
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            DebateTurn t = make_turn(i, question, running, round);
            running.push_back(t);
            out.push_back(std::move(t));
        }
        return out;
    }
    std::vector<std::future<DebateTurn>> pending;
    pending.reserve(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        pending.push_back(std::async(std::launch::async, [this, i, &question, history, round] {
            return make_turn(i, question, history, round);
        }));
    }
    // Merge in speaking order; get() rethrows the first failure.
    for (auto& f : pending) f.wait();
    for (auto& f : pending) out.push_back(f.get());
    return out;
}

core::DebateTranscript DebateEngine::run_debate(const core::QuestionRecord& question) const {
    core::DebateTranscript t;
    t.question_id = question.id;
    t.config_digest = config_digest_;
    t.n_agents = static_cast<int>(agents_.size());
    t.n_rounds = cfg_.rounds;
    t.selection_policy = cfg_.selection_policy;
    t.rng_seed = core::question_seed(cfg_.global_seed, question.id);
    try {
        t.turns = run_initial_round(question);
        for (int r = 1; r <= cfg_.rounds; ++r) {
            auto next = run_debate_round(question, t.turns, r);
            t.turns.insert(t.turns.end(), std::make_move_iterator(next.begin()), std::make_move_iterator(next.end()));
        }
    } catch (const Error& e) {
        t.status = core::TranscriptStatus::failed;
        t.error = e.what();
        return t;
    }
    std::vector<DebateTurn> final_turns;
    for (const auto* turn : t.round_turns(cfg_.rounds)) final_turns.push_back(*turn);
    core::Rng rng(core::mix_seed({t.rng_seed, 0x5e1ec7ULL}));
    Selection s = select_final_answer(final_turns, cfg_.selection_policy, rng);
    t.final_answer = std::move(s.answer);
    t.final_answer_agent = std::move(s.agent_id);
    return t;
}

Selection select_final_answer(std::span<const DebateTurn> final_turns, core::SelectionPolicy policy, core::Rng& rng) {
    if (final_turns.empty()) throw Error(ErrorCode::EmptyInput, "no turns to select from");
    if (policy == core::SelectionPolicy::argmax_confidence) {
        auto conf = [](const DebateTurn& t) { return t.conf_cal ? t.conf_cal->value() : 0.5; };
        double best = conf(final_turns.front());
        for (const auto& t : final_turns) best = std::max(best, conf(t));
        std::vector<const DebateTurn*> tied;
        for (const auto& t : final_turns) {
            if (conf(t) == best) tied.push_back(&t);
        }
        const DebateTurn* pick = tied.size() == 1 ? tied.front() : tied[core::uniform_index(rng, tied.size())];
        return {pick->answer_raw, pick->agent_id};
    }
    // Classes in order of first appearance keep the tie-break reproducible.
    std::vector<std::pair<const DebateTurn*, int>> classes;
    for (const auto& t : final_turns) {
        auto it = std::find_if(classes.begin(), classes.end(),
                               [&](const auto& c) { return c.first->answer_norm == t.answer_norm; });
        if (it == classes.end()) {
            classes.emplace_back(&t, 1);
        } else {
            ++it->second;
        }
    }
    int top = 0;
    for (const auto& c : classes) top = std::max(top, c.second);
    std::vector<const DebateTurn*> modal;
    for (const auto& c : classes) {
        if (c.second == top) modal.push_back(c.first);
    }
    const DebateTurn* pick = modal.size() == 1 ? modal.front() : modal[core::uniform_index(rng, modal.size())];
    return {pick->answer_raw, std::nullopt};
}

bool reached_consensus(const core::DebateTranscript& t, const core::QuestionRecord& question) {
    const auto final_turns = t.round_turns(t.n_rounds);
    if (final_turns.empty()) return false;
    for (const auto* turn : final_turns) {
        if (!core::answers_match(turn->answer_raw, final_turns.front()->answer_raw, question.answer_kind,
                                 question.choices)) {
            return false;
        }
    }
    return true;
}

}  // namespace confdebate::engine
