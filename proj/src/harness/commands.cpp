#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "confdebate/core/answer.hpp"
#include "confdebate/core/errors.hpp"
#include "confdebate/harness/harness.hpp"

namespace confdebate::harness {

using nlohmann::ordered_json;

namespace {

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Write-then-rename so an interrupted run never leaves a truncated file.
void write_file(const fs::path& path, std::string_view content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs fn(i) for i in [0, n) on `workers` threads.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), std::max<std::size_t>(n, 1));
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
    };
    if (k == 1) {
        loop();
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(k);
    for (std::size_t w = 0; w < k; ++w) pool.emplace_back(loop);
}

std::string model_id(const agents::AgentSpec& a) {
    if (a.backend == agents::Backend::remote) return a.remote.model;
    return std::string(agents::to_string(a.backend)) + ":" + a.agent_id;
}

}  // namespace

// ---------------------------------------------------------------------------
// calibrate

bool CalibrateResult::ok() const {
    return std::all_of(agents.begin(), agents.end(), [](const AgentCalibration& a) { return a.error.empty(); });
}

CalibrateResult cmd_calibrate(const CalibrateOptions& opts, std::span<const core::QuestionRecord> validation) {
    if (validation.empty()) throw Error(ErrorCode::EmptyInput, "validation set is empty");
    if (opts.mode.method == confidence::Method::None) {
        throw Error(ErrorCode::Config, "calibration needs a confidence method (ln or sv)");
    }
    if (opts.method == calibration::Method::temperature && opts.mode.method != confidence::Method::LN) {
        throw Error(ErrorCode::Config, "temperature calibration requires LN confidence");
    }

    engine::DebateConfig cfg;
    cfg.agents = opts.agents;
    cfg.rounds = 0;
    cfg.confidence_mode = opts.mode;
    cfg.global_seed = opts.seed;
    const engine::DebateEngine eng(cfg);

    std::vector<std::optional<std::vector<core::DebateTurn>>> rounds(validation.size());
    parallel_for(validation.size(), opts.workers, [&](std::size_t i) {
        try {
            rounds[i] = eng.run_initial_round(validation[i]);
        } catch (const Error&) {
            // Counted below; a lost question only shrinks the sample.
        }
    });

    CalibrateResult result;
    std::map<std::string, std::vector<std::pair<const core::DebateTurn*, bool>>> per_agent;
    for (std::size_t i = 0; i < validation.size(); ++i) {
        if (!rounds[i]) {
            ++result.failed_questions;
            continue;
        }
        for (const auto& turn : *rounds[i]) {
            if (!turn.conf_raw) continue;
            per_agent[turn.agent_id].emplace_back(&turn, core::answers_match(turn.answer_raw, validation[i]));
        }
    }

    fs::create_directories(opts.out_dir);
    for (const auto& spec : opts.agents) {
        AgentCalibration ac;
        ac.agent_id = spec.agent_id;
        const auto& data = per_agent[spec.agent_id];
        ac.n_samples = data.size();
        try {
            if (data.empty()) throw Error(ErrorCode::EmptyInput, "no scored round-0 turns");
            std::vector<calibration::LabeledScore> scores;
            std::vector<calibration::TemperatureRecord> records;
            for (const auto& [turn, ok] : data) {
                const core::ConfidenceScore s = opts.mode.granularity == confidence::Granularity::categorical
                                                    ? confidence::coarsen_categorical(*turn->conf_raw)
                                                    : *turn->conf_raw;
                scores.push_back({s.value(), ok});
                if (opts.method == calibration::Method::temperature) {
                    if (!turn->answer_tokens) {
                        throw Error(ErrorCode::IncompatibleCalibrator, "turn without answer-token logprobs");
                    }
                    records.push_back({*turn->answer_tokens, ok});
                }
            }
            calibration::Provenance pv{model_id(spec), opts.dataset_id, opts.mode, data.size(), utc_now()};
            calibration::Params params;
            switch (opts.method) {
                case calibration::Method::vanilla: break;
                case calibration::Method::platt: params = calibration::fit_platt(scores); break;
                case calibration::Method::histogram: params = calibration::fit_histogram(scores); break;
                case calibration::Method::temperature: params = calibration::fit_temperature(records); break;
            }
            const calibration::Calibrator cal(opts.method, params, pv);

            std::vector<calibration::LabeledScore> before;
            std::vector<calibration::LabeledScore> after;
            for (const auto& [turn, ok] : data) {
                before.push_back({turn->conf_raw->value(), ok});
                after.push_back({calibration::calibrate(cal, *turn, opts.mode.granularity).value(), ok});
            }
            ac.ece_before = metrics::ece(before).ece;
            ac.ece_after = metrics::ece(after).ece;
            const fs::path file = opts.out_dir / (spec.agent_id + ".cal.json");
            calibration::save_calibrator(cal, file);
            ac.file = file;
        } catch (const Error& e) {
            ac.error = e.what();
        }
        result.agents.push_back(std::move(ac));
    }
    return result;
}

void print_calibration_table(const CalibrateResult& result, std::ostream& out) {
    std::size_t width = 5;
    for (const auto& a : result.agents) width = std::max(width, a.agent_id.size());
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-*s  %7s  %10s  %10s\n", static_cast<int>(width), "agent", "n", "ECE before",
                  "ECE after");
    out << buf;
    for (const auto& a : result.agents) {
        if (!a.error.empty()) {
            std::snprintf(buf, sizeof(buf), "%-*s  %7zu  error: ", static_cast<int>(width), a.agent_id.c_str(),
                          a.n_samples);
            out << buf << a.error << "\n";
            continue;
        }
        std::snprintf(buf, sizeof(buf), "%-*s  %7zu  %10.4f  %10.4f\n", static_cast<int>(width), a.agent_id.c_str(),
                      a.n_samples, a.ece_before, a.ece_after);
        out << buf;
    }
    if (result.failed_questions > 0) out << result.failed_questions << " validation question(s) failed\n";
}

// ---------------------------------------------------------------------------
// debate

bool DebateRunSummary::within_budget(double budget) const {
    const std::size_t attempted = completed + failed;
    if (attempted == 0) return true;
    return static_cast<double>(failed) <= budget * static_cast<double>(attempted);
}

DebateRunSummary cmd_debate(const RunConfig& cfg, std::span<const core::QuestionRecord> dataset,
                            const fs::path& out_dir, const std::string& dataset_id,
                            std::vector<std::shared_ptr<agents::Agent>> agents) {
    if (cfg.workers < 1) throw Error(ErrorCode::Config, "workers must be >= 1");
    cfg.debate.validate();
    const auto started = std::chrono::steady_clock::now();
    const std::string started_at = utc_now();

    DebateRunSummary summary;
    summary.config_digest = config_digest(cfg);
    summary.n_questions = dataset.size();

    const fs::path tdir = out_dir / "transcripts";
    fs::create_directories(tdir);

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const fs::path file = tdir / transcript_file_name(dataset[i].id);
        if (cfg.resume && fs::exists(file)) {
            const auto t = engine::transcript_from_json(read_file(file));
            if (t.config_digest != summary.config_digest) {
                throw Error(ErrorCode::Config, "cannot resume: " + file.string() + " was produced by a different configuration");
            }
            if (t.status == core::TranscriptStatus::completed) {
                ++summary.skipped;
                continue;
            }
        }
        todo.push_back(i);
    }

    engine::DebateEngine eng = agents.empty() ? engine::DebateEngine(cfg.debate, summary.config_digest)
                                              : engine::DebateEngine(cfg.debate, std::move(agents), summary.config_digest);
    std::vector<std::atomic<std::size_t>> requests(cfg.debate.agents.size());
    eng.set_observer([&](const engine::RequestObservation& o) { ++requests[o.agent_index]; });

    std::mutex mu;
    parallel_for(todo.size(), cfg.workers, [&](std::size_t k) {
        const core::QuestionRecord& q = dataset[todo[k]];
        core::DebateTranscript t;
        try {
            t = eng.run_debate(q);
        } catch (const std::exception& e) {
            t.question_id = q.id;
            t.config_digest = summary.config_digest;
            t.n_agents = static_cast<int>(cfg.debate.agents.size());
            t.n_rounds = cfg.debate.rounds;
            t.selection_policy = cfg.debate.selection_policy;
            t.rng_seed = core::question_seed(cfg.debate.global_seed, q.id);
            t.status = core::TranscriptStatus::failed;
            t.error = e.what();
        }
        write_file(tdir / transcript_file_name(q.id), engine::transcript_to_json(t, &q));
        const std::lock_guard lock(mu);
        if (t.status == core::TranscriptStatus::completed) {
            ++summary.completed;
        } else {
            ++summary.failed;
            summary.failures.push_back({q.id, t.error});
        }
    });
    std::sort(summary.failures.begin(), summary.failures.end(),
              [](const QuestionFailure& a, const QuestionFailure& b) { return a.question_id < b.question_id; });
    for (std::size_t i = 0; i < cfg.debate.agents.size(); ++i) {
        summary.request_counts[cfg.debate.agents[i].agent_id] = requests[i].load();
    }
    summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    ordered_json manifest;
    manifest["config_digest"] = summary.config_digest;
    manifest["dataset"] = dataset_id;
    manifest["global_seed"] = cfg.debate.global_seed;
    manifest["workers"] = cfg.workers;
    manifest["resume"] = cfg.resume;
    manifest["n_questions"] = summary.n_questions;
    manifest["completed"] = summary.completed;
    manifest["failed"] = summary.failed;
    manifest["skipped"] = summary.skipped;
    ordered_json failures = ordered_json::array();
    for (const auto& f : summary.failures) failures.push_back({{"question_id", f.question_id}, {"error", f.error}});
    manifest["failures"] = std::move(failures);
    manifest["request_counts"] = summary.request_counts;
    ordered_json seeds = ordered_json::object();
    for (const auto& q : dataset) seeds[q.id] = core::question_seed(cfg.debate.global_seed, q.id);
    manifest["question_seeds"] = std::move(seeds);
    manifest["timings"] = {{"started_at", started_at}, {"finished_at", utc_now()}, {"wall_seconds", summary.wall_seconds}};
    write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return summary;
}

// ---------------------------------------------------------------------------
// report

std::vector<core::DebateTranscript> load_transcripts(const fs::path& run_dir) {
    const fs::path tdir = run_dir / "transcripts";
    if (!fs::is_directory(tdir)) throw Error(ErrorCode::Io, "no transcripts directory in " + run_dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(tdir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<core::DebateTranscript> out;
    out.reserve(files.size());
    for (const auto& f : files) {
        try {
            out.push_back(engine::transcript_from_json(read_file(f)));
        } catch (const Error& e) {
            throw Error(e.code(), f.string() + ": " + e.what());
        }
    }
    return out;
}

metrics::MetricsReport cmd_report(const fs::path& run_dir, std::span<const core::QuestionRecord> dataset) {
    const auto transcripts = load_transcripts(run_dir);
    const auto report = metrics::build_report(transcripts, metrics::index_gold(dataset));
    write_file(run_dir / "report.json", metrics::report_to_json(report));
    write_file(run_dir / "report.txt", metrics::report_to_text(report));
    write_file(run_dir / "ece_bins.csv", metrics::ece_bins_csv(report));
    return report;
}

}  // namespace confdebate::harness
