#include "confdebate/core/binning.hpp"

#include <algorithm>
#include <cmath>

namespace confdebate::core {

std::vector<double> equal_width_edges(std::size_t bins) {
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        edges[i] = static_cast<double>(i) / static_cast<double>(bins);
    }
    return edges;
}

std::size_t bin_index(double score, std::size_t bins) {
    const double m = static_cast<double>(bins);
    auto edge = [m](std::size_t i) { return static_cast<double>(i) / m; };
    const double clamped = std::clamp(score, 0.0, 1.0);
    auto idx = static_cast<std::size_t>(std::floor(clamped * m));
    idx = std::min(idx, bins - 1);
    // floor(s*M) can land one bin off when s sits on an edge i/M.
    while (idx + 1 < bins && clamped >= edge(idx + 1)) ++idx;
    while (idx > 0 && clamped < edge(idx)) --idx;
    return idx;
}

}  // namespace confdebate::core
