#pragma once

#include <nlohmann/json.hpp>

#include "confdebate/core/types.hpp"

namespace confdebate::agents {

/// Token logprobs in the chat-completions layout:
/// [{"token", "logprob", "top_logprobs": [{"token", "logprob"}]}].
core::TokenStream tokens_from_json(const nlohmann::json& content);
nlohmann::json tokens_to_json(const core::TokenStream& tokens);

}  // namespace confdebate::agents
