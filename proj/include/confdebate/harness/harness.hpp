#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "confdebate/calibration/calibration.hpp"
#include "confdebate/engine/engine.hpp"
#include "confdebate/metrics/metrics.hpp"

namespace confdebate::harness {

namespace fs = std::filesystem;

/// Everything `debate` needs besides the dataset and output directory.
struct RunConfig {
    engine::DebateConfig debate;
    /// Directory holding <agent_id>.cal.json files.
    fs::path calibrators_dir;
    /// Per-agent overrides of the calibrator path.
    std::map<std::string, fs::path> calibrator_paths;
    int workers = 1;
    bool resume = false;
    /// Share of failed questions above which the run reports failure.
    double failure_budget = 0.10;
};

/// [[agents]] tables of a TOML file. Relative script paths resolve against
/// `base_dir`.
std::vector<agents::AgentSpec> parse_agents_toml(std::string_view text, const fs::path& base_dir = {});
std::vector<agents::AgentSpec> load_agents_toml(const fs::path& path);

/// Full run configuration: [[agents]] plus an optional [debate] table.
/// Calibrators are not loaded here.
RunConfig parse_run_config(std::string_view text, const fs::path& base_dir = {});
RunConfig load_run_config(const fs::path& path);

/// Reads the calibrator of every agent into cfg.debate.calibrators. Does
/// nothing for vanilla runs or runs without confidence. Throws Error(Config)
/// when a file is missing or unusable.
void load_calibrators(RunConfig& cfg, std::vector<std::string>* warnings = nullptr);

/// SHA-256 hex digest of everything that can change a transcript: agents,
/// debate settings, seed and calibrator parameters. Worker count and
/// resume do not enter it.
std::string config_digest(const RunConfig& cfg);

/// File name of a question's transcript inside <out>/transcripts.
std::string transcript_file_name(std::string_view question_id);

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOptions {
    std::vector<agents::AgentSpec> agents;
    confidence::ConfidenceMode mode{confidence::Method::LN, confidence::Granularity::raw};
    calibration::Method method = calibration::Method::platt;
    fs::path out_dir;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string dataset_id;
};

struct AgentCalibration {
    std::string agent_id;
    std::size_t n_samples = 0;
    double ece_before = 0.0;
    double ece_after = 0.0;
    std::optional<fs::path> file;
    std::string error;  // empty on success
};

struct CalibrateResult {
    std::vector<AgentCalibration> agents;
    std::size_t failed_questions = 0;

    [[nodiscard]] bool ok() const;
};

/// Round 0 over the validation set, one fitted calibrator per agent written
/// to <out>/<agent_id>.cal.json. An agent whose data cannot be fitted gets
/// an error entry; the others are still written. Empty validation data
/// throws Error(EmptyInput) before anything is written.
CalibrateResult cmd_calibrate(const CalibrateOptions& opts, std::span<const core::QuestionRecord> validation);

/// Before/after ECE table.
void print_calibration_table(const CalibrateResult& result, std::ostream& out);

// ---------------------------------------------------------------------------
// debate

struct QuestionFailure {
    std::string question_id;
    std::string error;
};

struct DebateRunSummary {
    std::string config_digest;
    std::size_t n_questions = 0;
    std::size_t completed = 0;
    std::size_t failed = 0;
    std::size_t skipped = 0;  // already completed on resume
    std::vector<QuestionFailure> failures;
    std::map<std::string, std::size_t> request_counts;
    double wall_seconds = 0.0;

    /// False when more than `budget` of the attempted questions failed.
    [[nodiscard]] bool within_budget(double budget) const;
};

/// Runs every question with cfg.workers workers, writing
/// <out>/transcripts/<id>.json per question and <out>/manifest.json at the
/// end. Calibrators must already be loaded (see load_calibrators).
/// `agents` replaces the backends built from the specs when not empty.
DebateRunSummary cmd_debate(const RunConfig& cfg, std::span<const core::QuestionRecord> dataset,
                            const fs::path& out_dir, const std::string& dataset_id = {},
                            std::vector<std::shared_ptr<agents::Agent>> agents = {});

// ---------------------------------------------------------------------------
// report

std::vector<core::DebateTranscript> load_transcripts(const fs::path& run_dir);

/// Reads <dir>/transcripts, writes report.json, report.txt and
/// ece_bins.csv into `dir` and returns the report.
metrics::MetricsReport cmd_report(const fs::path& run_dir, std::span<const core::QuestionRecord> dataset);

}  // namespace confdebate::harness
