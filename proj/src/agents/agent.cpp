#include "confdebate/agents/agent.hpp"

#include <cmath>

#include "confdebate/core/errors.hpp"

namespace confdebate::agents {

std::string_view to_string(Backend b) noexcept {
    switch (b) {
        case Backend::remote: return "remote";
        case Backend::scripted: return "scripted";
        case Backend::simulated: return "simulated";
    }
    return "simulated";
}

Backend backend_from_string(std::string_view s) {
    if (s == "remote") return Backend::remote;
    if (s == "scripted") return Backend::scripted;
    if (s == "simulated") return Backend::simulated;
    throw Error(ErrorCode::Config, "unknown agent backend '" + std::string(s) + "'");
}

void AgentSpec::validate() const {
    const std::string who = "agent '" + agent_id + "'";
    if (agent_id.empty()) throw Error(ErrorCode::Config, "agent without id");
    switch (backend) {
        case Backend::remote:
            if (remote.base_url.empty() || remote.model.empty()) {
                throw Error(ErrorCode::Config, who + ": remote backend needs base_url and model");
            }
            if (remote.max_retries < 0 || remote.top_logprobs < 0 || remote.timeout_s <= 0) {
                throw Error(ErrorCode::Config, who + ": invalid remote settings");
            }
            break;
        case Backend::scripted:
            if (scripted.script.empty()) throw Error(ErrorCode::Config, who + ": scripted backend needs a script");
            break;
        case Backend::simulated: {
            const auto& s = simulated;
            if (!(s.base_accuracy >= 0.0 && s.base_accuracy <= 1.0)) {
                throw Error(ErrorCode::Config, who + ": base_accuracy must lie in [0,1]");
            }
            if (!(s.confidence_sharpness > 0.0)) throw Error(ErrorCode::Config, who + ": confidence_sharpness must be > 0");
            if (!(s.persuadability >= 0.0)) throw Error(ErrorCode::Config, who + ": persuadability must be >= 0");
            if (!(std::abs(s.miscalibration_bias) <= 0.3)) {
                throw Error(ErrorCode::Config, who + ": miscalibration_bias must lie in [-0.3, 0.3]");
            }
            if (s.n_distractors < 0) throw Error(ErrorCode::Config, who + ": n_distractors must be >= 0");
            break;
        }
    }
}

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, RemoteHooks hooks) {
    spec.validate();
    switch (spec.backend) {
        case Backend::remote: return std::make_unique<RemoteAgent>(spec, std::move(hooks));
        case Backend::scripted: return std::make_unique<ScriptedAgent>(spec, load_script(spec.scripted.script));
        case Backend::simulated: return std::make_unique<SimulatedAgent>(spec);
    }
    throw Error(ErrorCode::Config, "unknown backend");
}

}  // namespace confdebate::agents
