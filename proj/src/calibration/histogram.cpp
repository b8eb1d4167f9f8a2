#include "confdebate/calibration/calibration.hpp"
#include "confdebate/core/binning.hpp"
#include "confdebate/core/errors.hpp"

namespace confdebate::calibration {

HistogramParams fit_histogram(std::span<const LabeledScore> data, std::size_t bins) {
    if (data.empty()) throw Error(ErrorCode::EmptyInput, "histogram binning needs at least one sample");
    if (bins == 0) throw Error(ErrorCode::Config, "histogram binning needs at least one bin");

    std::vector<std::size_t> count(bins, 0);
    std::vector<std::size_t> correct(bins, 0);
    std::size_t total_correct = 0;
    for (const auto& d : data) {
        const std::size_t b = core::bin_index(d.score, bins);
        ++count[b];
        if (d.correct) {
            ++correct[b];
            ++total_correct;
        }
    }

    HistogramParams p;
    p.bin_edges = core::equal_width_edges(bins);
    p.fallback_value = static_cast<double>(total_correct) / static_cast<double>(data.size());
    p.bin_values.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        p.bin_values[b] = count[b] == 0 ? p.fallback_value
                                        : static_cast<double>(correct[b]) / static_cast<double>(count[b]);
    }
    return p;
}

core::ConfidenceScore apply_histogram(const HistogramParams& p, core::ConfidenceScore s) {
    return core::ConfidenceScore(p.bin_values.at(core::bin_index(s.value(), p.bins())));
}

}  // namespace confdebate::calibration
