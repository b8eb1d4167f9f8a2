#include <nlohmann/json.hpp>

#include "confdebate/agents/wire.hpp"
#include "confdebate/core/errors.hpp"
#include "confdebate/engine/engine.hpp"

namespace confdebate::engine {

using nlohmann::ordered_json;

namespace {

ordered_json score_json(const std::optional<core::ConfidenceScore>& s) {
    return s ? ordered_json(s->value()) : ordered_json(nullptr);
}

std::optional<core::ConfidenceScore> score_from(const ordered_json& j) {
    if (j.is_null()) return std::nullopt;
    return core::ConfidenceScore(j.get<double>());
}

}  // namespace

std::string transcript_to_json(const core::DebateTranscript& t, const core::QuestionRecord* question) {
    ordered_json turns = ordered_json::array();
    for (const auto& turn : t.turns) {
        ordered_json j = {
            {"agent_id", turn.agent_id},
            {"round", turn.round},
            {"reason", turn.reason},
            {"answer_raw", turn.answer_raw},
            {"answer_norm", turn.answer_norm},
            {"conf_raw", score_json(turn.conf_raw)},
            {"conf_cal", score_json(turn.conf_cal)},
            {"flags", turn.flags},
        };
        if (turn.answer_tokens) j["answer_tokens"] = ordered_json(agents::tokens_to_json(*turn.answer_tokens));
        if (turn.token_logprobs) j["token_logprobs"] = ordered_json(agents::tokens_to_json(*turn.token_logprobs));
        turns.push_back(std::move(j));
    }
    ordered_json doc;
    doc["question_id"] = t.question_id;
    doc["config_digest"] = t.config_digest;
    doc["n_agents"] = t.n_agents;
    doc["n_rounds"] = t.n_rounds;
    doc["turns"] = std::move(turns);
    doc["final_answer"] = t.final_answer;
    doc["final_answer_agent"] = t.final_answer_agent ? ordered_json(*t.final_answer_agent) : ordered_json(nullptr);
    doc["selection_policy"] = core::to_string(t.selection_policy);
    doc["rng_seed"] = t.rng_seed;
    doc["status"] = t.status == core::TranscriptStatus::completed ? "completed" : "failed";
    if (question != nullptr && t.status == core::TranscriptStatus::completed) {
        doc["consensus"] = reached_consensus(t, *question);
    }
    if (!t.error.empty()) doc["error"] = t.error;
    return doc.dump(2) + "\n";
}

core::DebateTranscript transcript_from_json(std::string_view text) {
    try {
        const auto doc = ordered_json::parse(text);
        core::DebateTranscript t;
        t.question_id = doc.at("question_id").get<std::string>();
        t.config_digest = doc.value("config_digest", "");
        for (const auto& j : doc.at("turns")) {
            core::DebateTurn turn;
            turn.agent_id = j.at("agent_id").get<std::string>();
            turn.round = j.at("round").get<int>();
            turn.reason = j.value("reason", "");
            turn.answer_raw = j.at("answer_raw").get<std::string>();
            turn.answer_norm = j.value("answer_norm", "");
            turn.conf_raw = score_from(j.value("conf_raw", ordered_json(nullptr)));
            turn.conf_cal = score_from(j.value("conf_cal", ordered_json(nullptr)));
            turn.flags = j.value("flags", std::vector<std::string>{});
            if (j.contains("answer_tokens")) turn.answer_tokens = agents::tokens_from_json(nlohmann::json(j["answer_tokens"]));
            if (j.contains("token_logprobs")) turn.token_logprobs = agents::tokens_from_json(nlohmann::json(j["token_logprobs"]));
            t.turns.push_back(std::move(turn));
        }
        int max_round = 0;
        std::size_t round0 = 0;
        for (const auto& turn : t.turns) {
            max_round = std::max(max_round, turn.round);
            if (turn.round == 0) ++round0;
        }
        t.n_agents = doc.value("n_agents", static_cast<int>(round0));
        t.n_rounds = doc.value("n_rounds", max_round);
        t.final_answer = doc.value("final_answer", "");
        if (doc.contains("final_answer_agent") && !doc["final_answer_agent"].is_null()) {
            t.final_answer_agent = doc["final_answer_agent"].get<std::string>();
        }
        t.selection_policy = core::selection_policy_from_string(doc.value("selection_policy", "argmax_confidence"));
        t.rng_seed = doc.value("rng_seed", std::uint64_t{0});
        const std::string status = doc.value("status", "completed");
        if (status != "completed" && status != "failed") throw Error(ErrorCode::Format, "unknown status " + status);
        t.status = status == "completed" ? core::TranscriptStatus::completed : core::TranscriptStatus::failed;
        t.error = doc.value("error", "");
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Format, std::string("malformed transcript: ") + e.what());
    }
}

}  // namespace confdebate::engine
