#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "confdebate/calibration/calibration.hpp"
#include "confdebate/core/types.hpp"

namespace confdebate::metrics {

using calibration::LabeledScore;

/// Gold records keyed by question id.
using GoldIndex = std::map<std::string, core::QuestionRecord>;
GoldIndex index_gold(std::span<const core::QuestionRecord> dataset);

struct BinStat {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double mean_conf = 0.0;  // 0 when the bin is empty
    double accuracy = 0.0;   // 0 when the bin is empty
};

struct EceResult {
    double ece = 0.0;
    std::vector<BinStat> bins;
};

/// Expected calibration error over M equal-width confidence bins:
/// sum_m |B_m|/n * |acc(B_m) - conf(B_m)|. Empty bins contribute 0.
/// Throws Error(EmptyInput) on no pairs.
EceResult ece(std::span<const LabeledScore> pairs, std::size_t bins = 10);

/// Same sum with the bin of each pair supplied by the caller, e.g. the
/// raw-score bin a histogram calibrator used for that sample.
EceResult ece_with_assignment(std::span<const LabeledScore> pairs, std::span<const std::size_t> bin_of,
                              std::size_t bins = 10);

struct ConsensusStats {
    std::size_t n_questions = 0;
    std::size_t consensus_count = 0;
    std::size_t correct_consensus_count = 0;

    [[nodiscard]] double rate() const;
};

/// Consensus: all final-round answers match pairwise (unanimity for n > 2).
/// Correct consensus additionally matches gold.
ConsensusStats consensus_metrics(std::span<const core::DebateTranscript> transcripts, const GoldIndex& gold);

/// Questions whose final answer is correct although at least one agent's
/// round-0 answer was wrong.
std::size_t correction_count(std::span<const core::DebateTranscript> transcripts, const GoldIndex& gold);

struct WinRate {
    std::size_t numerator = 0;
    std::size_t denominator = 0;

    /// Empty when the denominator is 0.
    [[nodiscard]] std::optional<double> rate() const;
    /// "0.614 (316/515)", or "n/a (0/0)".
    [[nodiscard]] std::string format() const;
};

/// Among two-agent questions where at round r exactly one agent is correct,
/// the answers differ and the calibrated confidences differ: the share
/// where the correct agent is strictly more confident.
/// Throws Error(MoreThanTwoAgents) for transcripts with n != 2 agents.
WinRate win_rate(std::span<const core::DebateTranscript> transcripts, const GoldIndex& gold, int round);

struct Accuracies {
    double system = 0.0;
    std::map<std::string, double> per_agent_final;
};

/// Throws Error(EmptyInput) when no transcripts are given.
Accuracies accuracies(std::span<const core::DebateTranscript> transcripts, const GoldIndex& gold);

struct MetricsReport {
    std::size_t n_questions = 0;  // completed transcripts with gold
    std::size_t failures = 0;
    std::size_t unmatched_transcripts = 0;  // no gold record for the id
    std::size_t missing_transcripts = 0;    // gold records without a transcript
    double accuracy_system = 0.0;
    std::map<std::string, double> accuracy_per_agent_final;
    double consensus_rate = 0.0;
    std::size_t consensus_count = 0;
    std::size_t correct_consensus_count = 0;
    std::size_t incorrect_consensus_count = 0;
    std::size_t disagree_count = 0;
    std::size_t correction_count = 0;
    /// Only filled for two-agent debates.
    std::map<int, WinRate> win_rate_per_round;
    std::map<std::pair<std::string, int>, EceResult> ece_per_agent_per_round;
};

/// Full report. Failed transcripts are excluded from every rate and counted
/// in `failures`; transcripts without a gold record are counted in
/// `unmatched_transcripts`.
MetricsReport build_report(std::span<const core::DebateTranscript> transcripts, const GoldIndex& gold);

std::string report_to_json(const MetricsReport& r);
std::string report_to_text(const MetricsReport& r);
/// agent_id,round,bin,lo,hi,count,mean_conf,accuracy rows.
std::string ece_bins_csv(const MetricsReport& r);

}  // namespace confdebate::metrics
