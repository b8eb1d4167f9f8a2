#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "confdebate/confidence/confidence.hpp"
#include "confdebate/core/types.hpp"

namespace confdebate::agents {

enum class Backend { remote, scripted, simulated };

std::string_view to_string(Backend b) noexcept;
Backend backend_from_string(std::string_view s);

struct RemoteConfig {
    std::string base_url;
    std::string model;
    /// Name of the environment variable holding the API key; empty sends
    /// no Authorization header.
    std::string api_key_env;
    int top_logprobs = 20;
    double timeout_s = 60.0;
    int max_retries = 3;
    double backoff_base_s = 1.0;
    double backoff_factor = 2.0;
    double temperature = 0.0;
    std::optional<int> max_tokens;
};

struct ScriptedConfig {
    std::filesystem::path script;
};

/// Parameters of the stochastic stand-in agent.
struct SimulatedConfig {
    double base_accuracy = 0.7;         // p
    double confidence_sharpness = 10.0; // kappa_c
    double persuadability = 5.0;        // kappa_p
    double miscalibration_bias = 0.0;   // b
    int n_distractors = 3;              // wrong candidates when a question has no choices
};

struct AgentSpec {
    std::string agent_id;
    Backend backend = Backend::simulated;
    std::string display_name;
    RemoteConfig remote;
    ScriptedConfig scripted;
    SimulatedConfig simulated;

    /// Throws Error(Config) on an unusable spec.
    void validate() const;
};

/// Side information the engine passes along with the prompts. Remote
/// agents ignore it; scripted agents key on it; simulated agents read the
/// structured history instead of the rendered text.
struct RequestContext {
    const core::QuestionRecord* question = nullptr;
    std::span<const core::DebateTurn> history;
    int round = 0;
    confidence::Method confidence_method = confidence::Method::SV;
    int attempt = 0;
};

struct AgentRequest {
    std::string system_prompt;
    std::string user_prompt;
    bool need_logprobs = false;
    std::uint64_t rng_seed = 0;
    RequestContext context;
};

struct AgentResponse {
    std::string text;
    std::optional<core::TokenStream> token_logprobs;
    std::int64_t latency_ms = 0;
    int attempt = 1;
};

class Agent {
public:
    explicit Agent(AgentSpec spec) : spec_(std::move(spec)) {}
    virtual ~Agent() = default;
    Agent(const Agent&) = delete;
    Agent& operator=(const Agent&) = delete;

    [[nodiscard]] const AgentSpec& spec() const noexcept { return spec_; }

    /// Thread-safe; may be called concurrently for different questions.
    virtual AgentResponse respond(const AgentRequest& request) = 0;

private:
    AgentSpec spec_;
};

// ---------------------------------------------------------------------------
// Scripted backend

struct ScriptEntry {
    std::string question_id;
    int round = 0;
    std::string agent_id;  // empty matches every agent
    std::string text;
    std::optional<core::TokenStream> token_logprobs;
};

/// Reads a JSONL script table of {question_id, round, agent_id, text} rows,
/// optionally with "logprobs": [{token, logprob, top_logprobs}].
std::vector<ScriptEntry> load_script(const std::filesystem::path& path);
std::vector<ScriptEntry> parse_script(std::string_view jsonl);

/// Replays stored completions keyed by (question_id, round). Every request
/// it receives is kept for inspection.
class ScriptedAgent final : public Agent {
public:
    ScriptedAgent(AgentSpec spec, std::vector<ScriptEntry> table);

    AgentResponse respond(const AgentRequest& request) override;

    struct LoggedRequest {
        std::string question_id;
        int round = 0;
        std::string system_prompt;
        std::string user_prompt;
        std::size_t history_turns = 0;
    };
    [[nodiscard]] std::vector<LoggedRequest> requests() const;

private:
    std::map<std::pair<std::string, int>, ScriptEntry> table_;
    mutable std::mutex mutex_;
    std::vector<LoggedRequest> log_;
};

// ---------------------------------------------------------------------------
// Simulated backend

struct SimulatedStep {
    std::string answer;
    core::ConfidenceScore confidence;
    bool switched = false;
};

/// Candidate answers for a question: the choice labels, or the gold answer
/// followed by `n_distractors` wrong ones.
/// `gold_index` points at the gold answer.
struct Candidates {
    std::vector<std::string> answers;
    std::size_t gold_index = 0;
};
Candidates candidate_answers(const core::QuestionRecord& question, int n_distractors);

/// One simulated utterance. Round 0 answers correctly with probability p;
/// later rounds adopt the most confident differing answer of the previous
/// round with probability sigmoid(kappa_p * (c_best - c_self)) when
/// c_best > c_self. Confidence is Beta(kappa_c q + 1, kappa_c (1-q) + 1)
/// with q = 0.8 (correct) or 0.4 (wrong), shifted by b and clamped.
/// Throws Error(NoCandidateAnswers) if no wrong answer can be formed.
SimulatedStep simulated_step(const AgentSpec& agent, const core::QuestionRecord& question,
                             std::span<const core::DebateTurn> history, int round, std::uint64_t rng_seed);

class SimulatedAgent final : public Agent {
public:
    explicit SimulatedAgent(AgentSpec spec) : Agent(std::move(spec)) {}

    /// Renders simulated_step as a structured completion. LN requests get a
    /// token stream whose answer token carries log(confidence).
    AgentResponse respond(const AgentRequest& request) override;
};

// ---------------------------------------------------------------------------
// Remote chat-completions backend

struct RemoteHooks {
    /// Receives the URL and exact JSON body of every outgoing request.
    std::function<void(const std::string& url, const std::string& body)> on_request;
    /// Replaces the real sleep between retries (tests record delays here).
    std::function<void(std::chrono::duration<double>)> sleep;
};

class RemoteAgent final : public Agent {
public:
    explicit RemoteAgent(AgentSpec spec, RemoteHooks hooks = {});

    AgentResponse respond(const AgentRequest& request) override;

    /// Request body for one call.
    [[nodiscard]] std::string request_body(const AgentRequest& request) const;

private:
    RemoteHooks hooks_;
};

/// Parses an OpenAI-style chat-completions response body. Throws
/// Error(LogprobsUnsupported) if `need_logprobs` and none were returned.
AgentResponse parse_chat_response(std::string_view body, bool need_logprobs);

/// Builds the backend named in `spec`; scripted agents load their table.
std::unique_ptr<Agent> make_agent(const AgentSpec& spec, RemoteHooks hooks = {});

}  // namespace confdebate::agents
