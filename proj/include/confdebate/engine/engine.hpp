#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "confdebate/agents/agent.hpp"
#include "confdebate/calibration/calibration.hpp"
#include "confdebate/confidence/confidence.hpp"
#include "confdebate/core/seed.hpp"
#include "confdebate/core/types.hpp"

namespace confdebate::engine {

enum class DebateMode { one_by_one, broadcast };

std::string_view to_string(DebateMode m) noexcept;
DebateMode debate_mode_from_string(std::string_view s);

struct DebateConfig {
    /// Speaking order is the order of this list.
    std::vector<agents::AgentSpec> agents;
    /// Debate rounds after the initial round.
    int rounds = 2;
    DebateMode mode = DebateMode::one_by_one;
    confidence::ConfidenceMode confidence_mode;
    /// Method the calibrators are expected to use; vanilla needs none.
    calibration::Method calibration_method = calibration::Method::vanilla;
    std::map<std::string, calibration::Calibrator> calibrators;
    core::SelectionPolicy selection_policy = core::SelectionPolicy::argmax_confidence;
    std::uint64_t global_seed = 0;
    int sv_parse_retries = 1;

    /// Throws Error(Config) when the configuration cannot run.
    void validate() const;
    [[nodiscard]] const agents::AgentSpec* find_agent(std::string_view agent_id) const;
};

struct PromptBundle {
    std::string system;
    std::string user;
};

/// Question text as shown to agents; choices are listed as "(A) ..." lines.
std::string render_question(const core::QuestionRecord& question);

/// Init template for round 0, Debate template otherwise. No-confidence runs
/// use the LN templates with every confidence sentence removed.
PromptBundle build_prompt(const agents::AgentSpec& agent, const DebateConfig& cfg,
                          const core::QuestionRecord& question, std::optional<std::string_view> history, int round);

/// Format reminder appended to the user prompt on a parse retry.
std::string format_reminder(confidence::Method method);

/// One block per turn: "[{name}, Round {r}]\nReason: ...\nAnswer: ...\n
/// Confidence: {0-100 or 0-10}". Blocks are separated by a blank line.
std::string render_history(std::span<const core::DebateTurn> turns, const DebateConfig& cfg);

/// Rendered confidence: 0-100, or 0-10 under categorical granularity.
int display_confidence(core::ConfidenceScore score, confidence::Granularity granularity);

struct Selection {
    std::string answer;
    std::optional<std::string> agent_id;
};

/// argmax_confidence picks the turn with the largest calibrated confidence;
/// majority_vote picks the modal normalized answer. Exact ties are broken
/// uniformly at random with `rng`.
Selection select_final_answer(std::span<const core::DebateTurn> final_turns, core::SelectionPolicy policy,
                              core::Rng& rng);

/// Seen by the engine before every agent call.
struct RequestObservation {
    std::string question_id;
    std::size_t agent_index = 0;
    int round = 0;
    int attempt = 0;
    PromptBundle prompt;
    std::size_t history_turns = 0;
};
using RequestObserver = std::function<void(const RequestObservation&)>;

/// Runs debates for one configuration. The agent list must follow the
/// order of cfg.agents. Thread-safe across questions.
class DebateEngine {
public:
    DebateEngine(DebateConfig cfg, std::vector<std::shared_ptr<agents::Agent>> agents,
                 std::string config_digest = {});

    /// Builds agents from the specs in `cfg`.
    explicit DebateEngine(DebateConfig cfg, std::string config_digest = {});

    void set_observer(RequestObserver observer) { observer_ = std::move(observer); }

    [[nodiscard]] const DebateConfig& config() const noexcept { return cfg_; }

    std::vector<core::DebateTurn> run_initial_round(const core::QuestionRecord& question) const;
    std::vector<core::DebateTurn> run_debate_round(const core::QuestionRecord& question,
                                                   std::span<const core::DebateTurn> history, int round) const;
    /// Initial round, cfg.rounds debate rounds, then selection. A failed
    /// agent call yields a partial transcript with status failed.
    core::DebateTranscript run_debate(const core::QuestionRecord& question) const;

private:
    core::DebateTurn make_turn(std::size_t agent_index, const core::QuestionRecord& question,
                               std::span<const core::DebateTurn> history, int round) const;

    DebateConfig cfg_;
    std::vector<std::shared_ptr<agents::Agent>> agents_;
    std::string config_digest_;
    RequestObserver observer_;
};

/// True when every agent's final-round answer matches every other's.
bool reached_consensus(const core::DebateTranscript& t, const core::QuestionRecord& question);

// Transcript file format.
std::string transcript_to_json(const core::DebateTranscript& t, const core::QuestionRecord* question = nullptr);
core::DebateTranscript transcript_from_json(std::string_view text);

}  // namespace confdebate::engine
