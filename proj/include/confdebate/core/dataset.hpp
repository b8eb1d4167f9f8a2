#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "confdebate/core/types.hpp"

namespace confdebate::core {

/// Reads a JSONL dataset: one object per line with keys id, question,
/// answer and optional choices / kind. Blank lines are skipped. Duplicate
/// ids and malformed records throw Error(Format).
std::vector<QuestionRecord> load_dataset(const std::filesystem::path& path);
std::vector<QuestionRecord> parse_dataset(std::string_view jsonl);

}  // namespace confdebate::core
