#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <thread>

#include "confdebate/agents/agent.hpp"
#include "confdebate/agents/wire.hpp"
#include "confdebate/core/errors.hpp"

namespace confdebate::agents {

using nlohmann::json;

core::TokenStream tokens_from_json(const json& content) {
    core::TokenStream out;
    for (const auto& item : content) {
        core::TokenLogprob t;
        t.token = item.at("token").get<std::string>();
        t.logprob = item.at("logprob").get<double>();
        if (item.contains("top_logprobs") && item["top_logprobs"].is_array()) {
            for (const auto& alt : item["top_logprobs"]) {
                t.top_alternatives.push_back({alt.at("token").get<std::string>(), alt.at("logprob").get<double>()});
            }
        }
        out.push_back(std::move(t));
    }
    return out;
}

json tokens_to_json(const core::TokenStream& tokens) {
    json out = json::array();
    for (const auto& t : tokens) {
        json alts = json::array();
        for (const auto& a : t.top_alternatives) alts.push_back({{"token", a.token}, {"logprob", a.logprob}});
        out.push_back({{"token", t.token}, {"logprob", t.logprob}, {"top_logprobs", alts}});
    }
    return out;
}

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;    // prefix + /chat/completions
};

Endpoint split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::Config, "base_url needs a scheme: " + base_url);
    const auto path_begin = base_url.find('/', scheme_end + 3);
    Endpoint e;
    e.origin = base_url.substr(0, path_begin);
    std::string prefix = path_begin == std::string::npos ? "" : base_url.substr(path_begin);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    e.path = prefix + "/chat/completions";
    return e;
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

AgentResponse parse_chat_response(std::string_view body, bool need_logprobs) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::BackendUnavailable, std::string("response is not JSON: ") + e.what());
    }
    AgentResponse r;
    try {
        const json& choice = doc.at("choices").at(0);
        r.text = choice.at("message").at("content").get<std::string>();
        if (choice.contains("logprobs") && choice["logprobs"].is_object() && choice["logprobs"].contains("content") &&
            choice["logprobs"]["content"].is_array()) {
            r.token_logprobs = tokens_from_json(choice["logprobs"]["content"]);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::BackendUnavailable, std::string("unexpected response shape: ") + e.what());
    }
    if (r.text.empty()) throw Error(ErrorCode::BackendUnavailable, "empty completion");
    if (need_logprobs && (!r.token_logprobs || r.token_logprobs->empty())) {
        throw Error(ErrorCode::LogprobsUnsupported, "backend returned no token logprobs");
    }
    return r;
}

RemoteAgent::RemoteAgent(AgentSpec spec, RemoteHooks hooks) : Agent(std::move(spec)), hooks_(std::move(hooks)) {}

std::string RemoteAgent::request_body(const AgentRequest& request) const {
    const auto& cfg = spec().remote;
    json body = {
        {"model", cfg.model},
        {"messages",
         json::array({{{"role", "system"}, {"content", request.system_prompt}},
                      {{"role", "user"}, {"content", request.user_prompt}}})},
        {"temperature", cfg.temperature},
    };
    if (cfg.max_tokens) body["max_tokens"] = *cfg.max_tokens;
    if (request.need_logprobs) {
        body["logprobs"] = true;
        body["top_logprobs"] = cfg.top_logprobs;
    }
    return body.dump();
}

AgentResponse RemoteAgent::respond(const AgentRequest& request) {
    const auto& cfg = spec().remote;
    const Endpoint endpoint = split_base_url(cfg.base_url);

    httplib::Headers headers;
    if (!cfg.api_key_env.empty()) {
        const char* key = std::getenv(cfg.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw Error(ErrorCode::Config, "environment variable " + cfg.api_key_env + " is not set");
        }
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const std::string body = request_body(request);
    httplib::Client client(endpoint.origin);
    const auto timeout = std::chrono::duration<double>(cfg.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

    std::string last_error;
    const auto started = std::chrono::steady_clock::now();
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) {
            const std::chrono::duration<double> delay(cfg.backoff_base_s * std::pow(cfg.backoff_factor, attempt - 1));
            if (hooks_.sleep) {
                hooks_.sleep(delay);
            } else {
                std::this_thread::sleep_for(delay);
            }
        }
        if (hooks_.on_request) hooks_.on_request(endpoint.origin + endpoint.path, body);
        auto res = client.Post(endpoint.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            AgentResponse r = parse_chat_response(res->body, request.need_logprobs);
            r.attempt = attempt + 1;
            r.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
            return r;
        }
        last_error = "HTTP " + std::to_string(res->status);
        if (!retryable(res->status)) break;
    }
    throw Error(ErrorCode::BackendUnavailable, "agent '" + spec().agent_id + "': " + last_error);
}

}  // namespace confdebate::agents
