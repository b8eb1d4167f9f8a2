// Command-line front end: calibrate, debate, report.

#include <iostream>

#include <CLI11.hpp>

#include "confdebate/core/dataset.hpp"
#include "confdebate/core/errors.hpp"
#include "confdebate/harness/harness.hpp"

namespace fs = std::filesystem;
using namespace confdebate;

namespace {

int run_calibrate(const fs::path& agents_file, const fs::path& validation, const std::string& mode,
                  const std::string& method, const fs::path& out, std::optional<std::uint64_t> seed, int workers,
                  const std::string& granularity) {
    harness::CalibrateOptions opts;
    opts.agents = harness::load_agents_toml(agents_file);
    opts.mode = {confidence::method_from_string(mode), confidence::granularity_from_string(granularity)};
    opts.method = calibration::method_from_string(method);
    opts.out_dir = out;
    opts.seed = seed.value_or(0);
    opts.workers = workers;
    opts.dataset_id = validation.filename().string();
    const auto records = core::load_dataset(validation);
    const auto result = harness::cmd_calibrate(opts, records);
    harness::print_calibration_table(result, std::cout);
    return result.ok() ? 0 : 1;
}

int run_debate(const fs::path& config, const fs::path& dataset, const fs::path& out, std::optional<int> workers,
               std::optional<std::uint64_t> seed, bool resume) {
    harness::RunConfig cfg = harness::load_run_config(config);
    if (workers) cfg.workers = *workers;
    if (seed) cfg.debate.global_seed = *seed;
    cfg.resume = resume;
    if (cfg.workers < 1) throw Error(ErrorCode::Config, "--workers must be >= 1");
    std::vector<std::string> warnings;
    harness::load_calibrators(cfg, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    const auto records = core::load_dataset(dataset);
    const auto summary = harness::cmd_debate(cfg, records, out, dataset.filename().string());
    std::cout << "questions " << summary.n_questions << ", completed " << summary.completed << ", failed "
              << summary.failed << ", skipped " << summary.skipped << "\n";
    std::cout << "config digest " << summary.config_digest << "\n";
    for (const auto& f : summary.failures) std::cerr << "failed " << f.question_id << ": " << f.error << "\n";
    if (!summary.within_budget(cfg.failure_budget)) {
        std::cerr << "error: failure share exceeds budget of " << cfg.failure_budget << "\n";
        return 1;
    }
    return 0;
}

int run_report(const fs::path& in, const fs::path& dataset, const std::string& format) {
    const auto records = core::load_dataset(dataset);
    const auto report = harness::cmd_report(in, records);
    if (report.unmatched_transcripts > 0 || report.missing_transcripts > 0) {
        std::cerr << "warning: " << report.unmatched_transcripts << " transcript(s) without a gold record, "
                  << report.missing_transcripts << " question(s) without a transcript\n";
    }
    if (format == "json") {
        std::cout << metrics::report_to_json(report);
    } else if (format == "csv") {
        std::cout << metrics::ece_bins_csv(report);
    } else {
        std::cout << metrics::report_to_text(report);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent debate with calibrated confidence"};
    app.require_subcommand(1);

    fs::path agents_file, validation, cal_out;
    std::string mode = "ln", method = "platt", granularity = "raw";
    std::optional<std::uint64_t> cal_seed;
    int cal_workers = 1;
    auto* cal = app.add_subcommand("calibrate", "Fit per-agent calibrators on a validation set");
    cal->add_option("--agents", agents_file, "TOML file with [[agents]] tables")->required()->check(CLI::ExistingFile);
    cal->add_option("--validation", validation, "Validation JSONL")->required()->check(CLI::ExistingFile);
    cal->add_option("--mode", mode, "Confidence method")->check(CLI::IsMember({"ln", "sv"}));
    cal->add_option("--method", method, "Calibration method")
        ->check(CLI::IsMember({"platt", "histogram", "temperature", "vanilla"}));
    cal->add_option("--out", cal_out, "Output directory for .cal.json files")->required();
    cal->add_option("--seed", cal_seed, "Global seed");
    cal->add_option("--workers", cal_workers, "Concurrent questions")->check(CLI::PositiveNumber);
    cal->add_option("--granularity", granularity, "Confidence granularity")->check(CLI::IsMember({"raw", "categorical"}));

    fs::path config, dataset, out;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    bool resume = false;
    auto* deb = app.add_subcommand("debate", "Run debates over a dataset");
    deb->add_option("--config", config, "Run configuration (TOML)")->required()->check(CLI::ExistingFile);
    deb->add_option("--dataset", dataset, "Test JSONL")->required()->check(CLI::ExistingFile);
    deb->add_option("--out", out, "Output directory")->required();
    deb->add_option("--workers", workers, "Concurrent questions")->check(CLI::PositiveNumber);
    deb->add_option("--seed", seed, "Global seed (overrides the config)");
    deb->add_flag("--resume", resume, "Skip questions that already have a completed transcript");

    fs::path report_in, report_dataset;
    std::string format = "text";
    auto* rep = app.add_subcommand("report", "Compute metrics over a run directory");
    rep->add_option("--in", report_in, "Run directory")->required()->check(CLI::ExistingDirectory);
    rep->add_option("--dataset", report_dataset, "Gold JSONL")->required()->check(CLI::ExistingFile);
    rep->add_option("--format", format, "Output on stdout")->check(CLI::IsMember({"json", "text", "csv"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cal) return run_calibrate(agents_file, validation, mode, method, cal_out, cal_seed, cal_workers, granularity);
        if (*deb) return run_debate(config, dataset, out, workers, seed, resume);
        return run_report(report_in, report_dataset, format);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
