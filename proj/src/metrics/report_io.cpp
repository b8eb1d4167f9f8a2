#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "confdebate/metrics/metrics.hpp"

namespace confdebate::metrics {

using nlohmann::ordered_json;

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace

std::string report_to_json(const MetricsReport& r) {
    ordered_json doc;
    doc["n_questions"] = r.n_questions;
    doc["failures"] = r.failures;
    doc["unmatched_transcripts"] = r.unmatched_transcripts;
    doc["missing_transcripts"] = r.missing_transcripts;
    doc["accuracy_system"] = r.accuracy_system;
    ordered_json per_agent = ordered_json::object();
    for (const auto& [id, acc] : r.accuracy_per_agent_final) per_agent[id] = acc;
    doc["accuracy_per_agent_final"] = std::move(per_agent);
    doc["consensus_rate"] = r.consensus_rate;
    doc["consensus_count"] = r.consensus_count;
    doc["correct_consensus_count"] = r.correct_consensus_count;
    doc["incorrect_consensus_count"] = r.incorrect_consensus_count;
    doc["disagree_count"] = r.disagree_count;
    doc["correction_count"] = r.correction_count;

    ordered_json win = ordered_json::object();
    for (const auto& [round, w] : r.win_rate_per_round) {
        const auto rate = w.rate();
        win[std::to_string(round)] = {
            {"rate", rate ? ordered_json(*rate) : ordered_json(nullptr)},
            {"numerator", w.numerator},
            {"denominator", w.denominator},
            {"display", w.format()},
        };
    }
    doc["win_rate_per_round"] = std::move(win);

    ordered_json ece_doc = ordered_json::object();
    for (const auto& [key, res] : r.ece_per_agent_per_round) {
        ordered_json bins = ordered_json::array();
        for (const auto& b : res.bins) {
            bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"mean_conf", b.mean_conf},
                            {"accuracy", b.accuracy}});
        }
        ece_doc[key.first][std::to_string(key.second)] = {{"ece", res.ece}, {"bins", std::move(bins)}};
    }
    doc["ece_per_agent_per_round"] = std::move(ece_doc);
    return doc.dump(2) + "\n";
}

std::string report_to_text(const MetricsReport& r) {
    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("questions", std::to_string(r.n_questions));
    rows.emplace_back("failures", std::to_string(r.failures));
    if (r.unmatched_transcripts > 0) rows.emplace_back("unmatched transcripts", std::to_string(r.unmatched_transcripts));
    if (r.missing_transcripts > 0) rows.emplace_back("missing transcripts", std::to_string(r.missing_transcripts));
    rows.emplace_back("system accuracy", fixed(r.accuracy_system, 4));
    for (const auto& [id, acc] : r.accuracy_per_agent_final) rows.emplace_back("  " + id + " final accuracy", fixed(acc, 4));
    rows.emplace_back("consensus rate", fixed(r.consensus_rate, 4) + " (" + std::to_string(r.consensus_count) + "/" +
                                            std::to_string(r.n_questions) + ")");
    rows.emplace_back("  correct consensus", std::to_string(r.correct_consensus_count));
    rows.emplace_back("  incorrect consensus", std::to_string(r.incorrect_consensus_count));
    rows.emplace_back("  disagree", std::to_string(r.disagree_count));
    rows.emplace_back("corrections", std::to_string(r.correction_count));
    for (const auto& [round, w] : r.win_rate_per_round) rows.emplace_back("win rate round " + std::to_string(round), w.format());

    std::size_t width = 0;
    for (const auto& row : rows) width = std::max(width, row.first.size());
    std::ostringstream out;
    for (const auto& [label, value] : rows) out << label << std::string(width - label.size() + 2, ' ') << value << "\n";

    if (!r.ece_per_agent_per_round.empty()) {
        // ECE grid: one line per agent, one column per round.
        std::map<std::string, std::map<int, double>> grid;
        std::set<int> rounds;
        std::size_t agent_width = 5;
        for (const auto& [key, res] : r.ece_per_agent_per_round) {
            grid[key.first][key.second] = res.ece;
            rounds.insert(key.second);
            agent_width = std::max(agent_width, key.first.size());
        }
        auto emit = [&](std::string line) {
            line.erase(line.find_last_not_of(' ') + 1);
            out << line << "\n";
        };
        std::string header = "ECE" + std::string(agent_width - 1, ' ');
        for (int round : rounds) header += pad("  round " + std::to_string(round), 10);
        emit("\n" + header);
        for (const auto& [agent, per_round] : grid) {
            std::string line = agent + std::string(agent_width - agent.size() + 2, ' ');
            for (int round : rounds) {
                const auto it = per_round.find(round);
                line += pad("  " + (it == per_round.end() ? std::string("-") : fixed(it->second, 4)), 10);
            }
            emit(line);
        }
    }
    return out.str();
}

std::string ece_bins_csv(const MetricsReport& r) {
    std::ostringstream out;
    out << "agent_id,round,bin,lo,hi,count,mean_conf,accuracy\n";
    for (const auto& [key, res] : r.ece_per_agent_per_round) {
        for (std::size_t b = 0; b < res.bins.size(); ++b) {
            const auto& bin = res.bins[b];
            out << key.first << ',' << key.second << ',' << b << ',' << fixed(bin.lo, 2) << ',' << fixed(bin.hi, 2)
                << ',' << bin.count << ',' << fixed(bin.mean_conf, 6) << ',' << fixed(bin.accuracy, 6) << "\n";
        }
    }
    return out.str();
}

}  // namespace confdebate::metrics
