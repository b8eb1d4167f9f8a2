#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

#include <boost/random/mersenne_twister.hpp>

namespace confdebate::core {

using Rng = boost::random::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view s) noexcept;

/// Order-sensitive combination of seed components.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) noexcept;

/// Per-question seed: hash(global_seed, question id).
std::uint64_t question_seed(std::uint64_t global_seed, std::string_view question_id) noexcept;

/// Uniform integer in [0, n) without modulo bias; n > 0.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(Rng& rng);

}  // namespace confdebate::core
