#include "confdebate/metrics/metrics.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <set>

#include "confdebate/core/answer.hpp"
#include "confdebate/core/binning.hpp"
#include "confdebate/core/errors.hpp"

namespace confdebate::metrics {

using core::DebateTranscript;
using core::DebateTurn;

GoldIndex index_gold(std::span<const core::QuestionRecord> dataset) {
    GoldIndex out;
    for (const auto& q : dataset) out.emplace(q.id, q);
    return out;
}

EceResult ece_with_assignment(std::span<const LabeledScore> pairs, std::span<const std::size_t> bin_of,
                              std::size_t bins) {
    if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "ECE of no samples");
    if (bins == 0) throw Error(ErrorCode::Config, "ECE needs at least one bin");
    if (bin_of.size() != pairs.size()) throw Error(ErrorCode::Config, "one bin assignment per sample required");

    const auto edges = core::equal_width_edges(bins);
    EceResult out;
    out.bins.resize(bins);
    std::vector<std::size_t> correct(bins, 0);
    for (std::size_t b = 0; b < bins; ++b) {
        out.bins[b].lo = edges[b];
        out.bins[b].hi = edges[b + 1];
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        BinStat& bin = out.bins.at(bin_of[i]);
        ++bin.count;
        // Running mean: a bin of identical scores keeps that score exactly.
        bin.mean_conf += (pairs[i].score - bin.mean_conf) / static_cast<double>(bin.count);
        if (pairs[i].correct) ++correct[bin_of[i]];
    }
    const double n = static_cast<double>(pairs.size());
    for (std::size_t b = 0; b < bins; ++b) {
        BinStat& bin = out.bins[b];
        if (bin.count == 0) continue;
        bin.accuracy = static_cast<double>(correct[b]) / static_cast<double>(bin.count);
        out.ece += static_cast<double>(bin.count) / n * std::abs(bin.accuracy - bin.mean_conf);
    }
    return out;
}

EceResult ece(std::span<const LabeledScore> pairs, std::size_t bins) {
    if (bins == 0) throw Error(ErrorCode::Config, "ECE needs at least one bin");
    std::vector<std::size_t> bin_of;
    bin_of.reserve(pairs.size());
    for (const auto& p : pairs) bin_of.push_back(core::bin_index(p.score, bins));
    return ece_with_assignment(pairs, bin_of, bins);
}

namespace {

const core::QuestionRecord* gold_for(const DebateTranscript& t, const GoldIndex& gold) {
    const auto it = gold.find(t.question_id);
    return it == gold.end() ? nullptr : &it->second;
}

bool usable(const DebateTranscript& t, const GoldIndex& gold) {
    return t.status == core::TranscriptStatus::completed && gold_for(t, gold) != nullptr;
}

bool correct(std::string_view answer, const core::QuestionRecord& q) { return core::answers_match(answer, q); }

bool unanimous(const std::vector<const DebateTurn*>& turns, const core::QuestionRecord& q) {
    if (turns.empty()) return false;
    for (const auto* t : turns) {
        if (!core::answers_match(t->answer_raw, turns.front()->answer_raw, q.answer_kind, q.choices)) return false;
    }
    return true;
}

}  // namespace

double ConsensusStats::rate() const {
    return n_questions == 0 ? 0.0 : static_cast<double>(consensus_count) / static_cast<double>(n_questions);
}

ConsensusStats consensus_metrics(std::span<const DebateTranscript> transcripts, const GoldIndex& gold) {
    ConsensusStats s;
    for (const auto& t : transcripts) {
        if (!usable(t, gold)) continue;
        const auto& q = *gold_for(t, gold);
        ++s.n_questions;
        const auto final_turns = t.round_turns(t.n_rounds);
        if (!unanimous(final_turns, q)) continue;
        ++s.consensus_count;
        if (correct(final_turns.front()->answer_raw, q)) ++s.correct_consensus_count;
    }
    return s;
}

std::size_t correction_count(std::span<const DebateTranscript> transcripts, const GoldIndex& gold) {
    std::size_t count = 0;
    for (const auto& t : transcripts) {
        if (!usable(t, gold)) continue;
        const auto& q = *gold_for(t, gold);
        if (!correct(t.final_answer, q)) continue;
        const auto initial = t.round_turns(0);
        const bool any_wrong =
            std::any_of(initial.begin(), initial.end(), [&](const DebateTurn* turn) { return !correct(turn->answer_raw, q); });
        if (any_wrong) ++count;
    }
    return count;
}

std::optional<double> WinRate::rate() const {
    if (denominator == 0) return std::nullopt;
    return static_cast<double>(numerator) / static_cast<double>(denominator);
}

std::string WinRate::format() const {
    char buf[64];
    const auto r = rate();
    if (r) {
        std::snprintf(buf, sizeof(buf), "%.3f (%zu/%zu)", *r, numerator, denominator);
    } else {
        std::snprintf(buf, sizeof(buf), "n/a (%zu/%zu)", numerator, denominator);
    }
    return buf;
}

WinRate win_rate(std::span<const DebateTranscript> transcripts, const GoldIndex& gold, int round) {
    WinRate w;
    for (const auto& t : transcripts) {
        if (!usable(t, gold)) continue;
        if (t.n_agents != 2) throw Error(ErrorCode::MoreThanTwoAgents, "win rate is defined for two-agent debates");
        const auto& q = *gold_for(t, gold);
        const auto turns = t.round_turns(round);
        if (turns.size() != 2) continue;
        const DebateTurn& a = *turns[0];
        const DebateTurn& b = *turns[1];
        const bool a_ok = correct(a.answer_raw, q);
        const bool b_ok = correct(b.answer_raw, q);
        if (a_ok == b_ok) continue;
        if (core::answers_match(a.answer_raw, b.answer_raw, q.answer_kind, q.choices)) continue;
        if (!a.conf_cal || !b.conf_cal || a.conf_cal->value() == b.conf_cal->value()) continue;
        ++w.denominator;
        const double c_right = a_ok ? a.conf_cal->value() : b.conf_cal->value();
        const double c_wrong = a_ok ? b.conf_cal->value() : a.conf_cal->value();
        if (c_right > c_wrong) ++w.numerator;
    }
    return w;
}

Accuracies accuracies(std::span<const DebateTranscript> transcripts, const GoldIndex& gold) {
    std::size_t n = 0;
    std::size_t system_ok = 0;
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_agent;  // (correct, seen)
    for (const auto& t : transcripts) {
        if (!usable(t, gold)) continue;
        const auto& q = *gold_for(t, gold);
        ++n;
        if (correct(t.final_answer, q)) ++system_ok;
        for (const auto* turn : t.round_turns(t.n_rounds)) {
            auto& [ok, seen] = per_agent[turn->agent_id];
            ++seen;
            if (correct(turn->answer_raw, q)) ++ok;
        }
    }
    if (n == 0) throw Error(ErrorCode::EmptyInput, "no completed transcripts with gold answers");
    Accuracies a;
    a.system = static_cast<double>(system_ok) / static_cast<double>(n);
    for (const auto& [id, counts] : per_agent) {
        a.per_agent_final[id] = static_cast<double>(counts.first) / static_cast<double>(counts.second);
    }
    return a;
}

MetricsReport build_report(std::span<const DebateTranscript> transcripts, const GoldIndex& gold) {
    MetricsReport r;
    std::vector<DebateTranscript> kept;
    std::set<std::string> seen_ids;
    for (const auto& t : transcripts) {
        seen_ids.insert(t.question_id);
        if (gold_for(t, gold) == nullptr) {
            ++r.unmatched_transcripts;
        } else if (t.status == core::TranscriptStatus::failed) {
            ++r.failures;
        } else {
            kept.push_back(t);
        }
    }
    for (const auto& [id, q] : gold) {
        if (!seen_ids.contains(id)) ++r.missing_transcripts;
    }
    r.n_questions = kept.size();
    if (kept.empty()) return r;

    const Accuracies acc = accuracies(kept, gold);
    r.accuracy_system = acc.system;
    r.accuracy_per_agent_final = acc.per_agent_final;

    const ConsensusStats cons = consensus_metrics(kept, gold);
    r.consensus_rate = cons.rate();
    r.consensus_count = cons.consensus_count;
    r.correct_consensus_count = cons.correct_consensus_count;
    r.incorrect_consensus_count = cons.consensus_count - cons.correct_consensus_count;
    r.disagree_count = cons.n_questions - cons.consensus_count;
    r.correction_count = correction_count(kept, gold);

    int max_round = 0;
    bool two_agent = true;
    for (const auto& t : kept) {
        max_round = std::max(max_round, t.n_rounds);
        two_agent = two_agent && t.n_agents == 2;
    }
    if (two_agent) {
        for (int round = 0; round <= max_round; ++round) r.win_rate_per_round[round] = win_rate(kept, gold, round);
    }

    std::map<std::pair<std::string, int>, std::vector<LabeledScore>> pairs;
    for (const auto& t : kept) {
        const auto& q = *gold_for(t, gold);
        for (const auto& turn : t.turns) {
            if (!turn.conf_cal) continue;
            pairs[{turn.agent_id, turn.round}].push_back({turn.conf_cal->value(), correct(turn.answer_raw, q)});
        }
    }
    for (const auto& [key, data] : pairs) r.ece_per_agent_per_round[key] = ece(data, 10);
    return r;
}

}  // namespace confdebate::metrics
