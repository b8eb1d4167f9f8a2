#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "confdebate/agents/agent.hpp"
#include "confdebate/agents/wire.hpp"
#include "confdebate/core/errors.hpp"
#include "confdebate/core/parse.hpp"

namespace confdebate::agents {

std::vector<ScriptEntry> parse_script(std::string_view jsonl) {
    std::vector<ScriptEntry> out;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (core::trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ScriptEntry e;
            e.question_id = j.at("question_id").get<std::string>();
            e.round = j.at("round").get<int>();
            e.agent_id = j.value("agent_id", "");
            e.text = j.at("text").get<std::string>();
            if (j.contains("logprobs") && !j["logprobs"].is_null()) e.token_logprobs = tokens_from_json(j["logprobs"]);
            out.push_back(std::move(e));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::Format, "script line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<ScriptEntry> load_script(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open script " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_script(buf.str());
}

ScriptedAgent::ScriptedAgent(AgentSpec spec, std::vector<ScriptEntry> table) : Agent(std::move(spec)) {
    // Agent-specific rows override rows shared by all agents.
    for (auto& e : table) {
        if (!e.agent_id.empty()) continue;
        table_[{e.question_id, e.round}] = e;
    }
    for (auto& e : table) {
        if (e.agent_id != this->spec().agent_id) continue;
        table_[{e.question_id, e.round}] = std::move(e);
    }
}

AgentResponse ScriptedAgent::respond(const AgentRequest& request) {
    const auto& ctx = request.context;
    if (ctx.question == nullptr) throw Error(ErrorCode::BackendUnavailable, "scripted agent needs question metadata");
    {
        std::lock_guard lock(mutex_);
        log_.push_back({ctx.question->id, ctx.round, request.system_prompt, request.user_prompt, ctx.history.size()});
    }
    const auto it = table_.find({ctx.question->id, ctx.round});
    if (it == table_.end()) {
        throw Error(ErrorCode::BackendUnavailable, "no scripted reply for agent '" + spec().agent_id +
                                                       "', question '" + ctx.question->id + "', round " +
                                                       std::to_string(ctx.round));
    }
    if (request.need_logprobs && !it->second.token_logprobs) {
        throw Error(ErrorCode::LogprobsUnsupported, "scripted reply has no logprobs");
    }
    AgentResponse r;
    r.text = it->second.text;
    if (request.need_logprobs) r.token_logprobs = it->second.token_logprobs;
    return r;
}

std::vector<ScriptedAgent::LoggedRequest> ScriptedAgent::requests() const {
    std::lock_guard lock(mutex_);
    return log_;
}

}  // namespace confdebate::agents
