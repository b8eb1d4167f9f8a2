#pragma once

#include <cstddef>
#include <vector>

namespace confdebate::core {

/// Edges i/M for i = 0..M.
std::vector<double> equal_width_edges(std::size_t bins);

/// Equal-width bin of a score in [0,1]. A score on an interior edge
/// belongs to the higher bin; 1.0 belongs to the last bin.
std::size_t bin_index(double score, std::size_t bins);

}  // namespace confdebate::core
