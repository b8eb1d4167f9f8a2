#include <doctest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "confdebate/core/dataset.hpp"
#include "confdebate/core/errors.hpp"
#include "confdebate/harness/harness.hpp"
#include "support.hpp"

using namespace confdebate;
using namespace confdebate::harness;
using testsupport::read_file;
using testsupport::TempDir;
using testsupport::write_file;

namespace {

std::vector<core::QuestionRecord> numeric_dataset(const std::string& prefix, int n) {
    std::vector<core::QuestionRecord> out;
    for (int i = 0; i < n; ++i) {
        core::QuestionRecord q;
        q.id = prefix + std::to_string(i);
        q.question = "What is " + std::to_string(i) + " + 1?";
        q.gold_answer = std::to_string(i + 1);
        q.answer_kind = core::AnswerKind::numeric;
        out.push_back(q);
    }
    return out;
}

const char* kRunToml = R"(
[[agents]]
id = "strong"
name = "Debater 1"
[agents.simulated]
base_accuracy = 0.8

[[agents]]
id = "weak"
[agents.simulated]
base_accuracy = 0.6
miscalibration_bias = 0.2

[debate]
rounds = 1
confidence = "sv"
calibration = "vanilla"
seed = 3
)";

std::vector<agents::AgentSpec> two_agents() { return parse_agents_toml(kRunToml); }

std::string slurp_dir(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) all += fs::relative(f, dir).string() + "\n" + read_file(f) + "\n";
    return all;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("run config from TOML") {
    const auto cfg = parse_run_config(kRunToml, "/base");
    REQUIRE(cfg.debate.agents.size() == 2);
    CHECK(cfg.debate.agents[0].display_name == "Debater 1");
    CHECK(cfg.debate.agents[0].simulated.base_accuracy == 0.8);
    CHECK(cfg.debate.agents[1].simulated.miscalibration_bias == 0.2);
    CHECK(cfg.debate.rounds == 1);
    CHECK(cfg.debate.confidence_mode.method == confidence::Method::SV);
    CHECK(cfg.debate.global_seed == 3);
    CHECK(cfg.workers == 1);
    CHECK(cfg.failure_budget == 0.10);

    const auto scripted = parse_agents_toml(R"(
[[agents]]
id = "s"
backend = "scripted"
[agents.scripted]
script = "replies.jsonl"
)",
                                            "/base");
    CHECK(scripted[0].scripted.script == fs::path("/base/replies.jsonl"));
}

TEST_CASE("TOML errors") {
    auto config_error = [](const std::string& text) {
        try {
            parse_run_config(text);
        } catch (const Error& e) {
            return e.code() == ErrorCode::Config;
        }
        return false;
    };
    CHECK(config_error(""));
    CHECK(config_error("[[agents]]\nid = \"a\"\ncolour = \"red\"\n"));
    CHECK(config_error("[[agents]]\nid = \"a\"\n[[agents]]\nid = \"a\"\n"));
    CHECK(config_error("[[agents]]\nid = \"a\"\n[debate]\nmode = \"sideways\"\n"));
    CHECK(config_error("[[agents]]\nid = \"a\"\n[debate]\nrounds = \"two\"\n"));
    CHECK(config_error("[[agents]]\nid = \"a\"\n[debate]\nworkers = 0\n"));
    CHECK(config_error("[[agents]]\nid = \"a\"\nbackend = \"remote\"\n"));
    CHECK(config_error("this is not toml ="));
}

TEST_CASE("config digest") {
    const auto base = parse_run_config(kRunToml);
    const auto digest = config_digest(base);
    CHECK(digest.size() == 64);
    CHECK(config_digest(parse_run_config(kRunToml)) == digest);

    auto workers = base;
    workers.workers = 8;
    workers.resume = true;
    CHECK(config_digest(workers) == digest);

    std::vector<RunConfig> changed(8, base);
    changed[0].debate.rounds = 2;
    changed[1].debate.mode = engine::DebateMode::broadcast;
    changed[2].debate.confidence_mode.method = confidence::Method::LN;
    changed[3].debate.confidence_mode.granularity = confidence::Granularity::categorical;
    changed[4].debate.selection_policy = core::SelectionPolicy::majority_vote;
    changed[5].debate.global_seed = 4;
    changed[6].debate.agents[1].simulated.persuadability = 1.0;
    changed[7].debate.sv_parse_retries = 3;
    for (const auto& c : changed) CHECK(config_digest(c) != digest);

    auto calibrated = base;
    calibrated.debate.calibration_method = calibration::Method::platt;
    calibrated.debate.calibrators["strong"] =
        calibration::Calibrator(calibration::Method::platt, calibration::PlattParams{1.0, 0.0}, {});
    auto other = calibrated;
    other.debate.calibrators["strong"] =
        calibration::Calibrator(calibration::Method::platt, calibration::PlattParams{1.0, 0.5}, {});
    CHECK(config_digest(calibrated) != config_digest(other));
}

TEST_CASE("transcript file names") {
    CHECK(transcript_file_name("q1") == "q1.json");
    const auto odd = transcript_file_name("a/b");
    CHECK(odd.find('/') == std::string::npos);
    CHECK(odd != transcript_file_name("a_b"));
}

TEST_CASE("calibrate writes one file per agent") {
    TempDir dir("cal");
    CalibrateOptions opts;
    opts.agents = two_agents();
    opts.mode = {confidence::Method::LN, confidence::Granularity::raw};
    opts.method = calibration::Method::platt;
    opts.out_dir = dir.path();
    opts.seed = 1;
    const auto validation = numeric_dataset("v", 300);
    const auto result = cmd_calibrate(opts, validation);
    REQUIRE(result.ok());
    REQUIRE(result.agents.size() == 2);
    for (const auto& a : result.agents) {
        CHECK(a.n_samples == 300);
        REQUIRE(a.file);
        CHECK(fs::exists(*a.file));
        const auto cal = calibration::load_calibrator(*a.file);
        CHECK(cal.method() == calibration::Method::platt);
        CHECK(cal.provenance().n_samples == 300);
    }
    CHECK(fs::exists(dir.path() / "strong.cal.json"));
    CHECK(fs::exists(dir.path() / "weak.cal.json"));
    // The biased agent is overconfident; Platt has to help it.
    CHECK(result.agents[1].ece_after < result.agents[1].ece_before);

    std::ostringstream table;
    print_calibration_table(result, table);
    CHECK(table.str().find("weak") != std::string::npos);
}

TEST_CASE("vanilla calibration leaves ECE unchanged") {
    TempDir dir("van");
    CalibrateOptions opts;
    opts.agents = two_agents();
    opts.method = calibration::Method::vanilla;
    opts.out_dir = dir.path();
    const auto validation = numeric_dataset("v", 100);
    const auto result = cmd_calibrate(opts, validation);
    REQUIRE(result.ok());
    for (const auto& a : result.agents) CHECK(a.ece_before == a.ece_after);
}

TEST_CASE("calibrate rejects empty validation data") {
    TempDir dir("empty");
    CalibrateOptions opts;
    opts.agents = two_agents();
    opts.out_dir = dir.path() / "out";
    try {
        cmd_calibrate(opts, {});
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyInput);
    }
    CHECK_FALSE(fs::exists(opts.out_dir / "strong.cal.json"));
}

TEST_CASE("debate run, manifest and resume") {
    TempDir dir("run");
    auto cfg = parse_run_config(kRunToml);
    const auto data = numeric_dataset("q", 20);
    const auto summary = cmd_debate(cfg, data, dir.path(), "synthetic");
    CHECK(summary.completed == 20);
    CHECK(summary.failed == 0);
    CHECK(summary.within_budget(0.10));
    CHECK(summary.request_counts.at("strong") == 40);

    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir.path() / "transcripts")) files += e.is_regular_file();
    CHECK(files == 20);
    const auto manifest = nlohmann::json::parse(read_file(dir.path() / "manifest.json"));
    CHECK(manifest["config_digest"] == config_digest(cfg));
    CHECK(manifest["n_questions"] == 20);
    CHECK(manifest["question_seeds"].size() == 20);

    // Lose half the transcripts, then resume.
    for (int i = 0; i < 10; ++i) fs::remove(dir.path() / "transcripts" / transcript_file_name("q" + std::to_string(i)));
    cfg.resume = true;
    const auto resumed = cmd_debate(cfg, data, dir.path());
    CHECK(resumed.skipped == 10);
    CHECK(resumed.completed == 10);
    CHECK(resumed.request_counts.at("strong") == 20);

    auto other = cfg;
    other.debate.global_seed = 99;
    CHECK_THROWS_AS(cmd_debate(other, data, dir.path()), Error);
}

TEST_CASE("output does not depend on the worker count") {
    TempDir a("w1");
    TempDir b("w8");
    auto cfg = parse_run_config(kRunToml);
    const auto data = numeric_dataset("q", 40);
    cmd_debate(cfg, data, a.path());
    cfg.workers = 8;
    cmd_debate(cfg, data, b.path());
    cmd_report(a.path(), data);
    cmd_report(b.path(), data);
    CHECK(slurp_dir(a.path()) == slurp_dir(b.path()));
}

TEST_CASE("missing calibrator stops the run before any call") {
    TempDir dir("nocal");
    auto cfg = parse_run_config(kRunToml);
    cfg.debate.confidence_mode.method = confidence::Method::LN;
    cfg.debate.calibration_method = calibration::Method::platt;
    cfg.calibrators_dir = dir.path() / "cals";
    try {
        load_calibrators(cfg);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Config);
    }

    const std::string script_text = R"({"question_id":"q0","round":0,"text":"Reason: r\nAnswer: 1"})";
    std::vector<std::shared_ptr<agents::Agent>> agents;
    std::vector<agents::ScriptedAgent*> raw;
    for (auto& spec : cfg.debate.agents) {
        spec.backend = agents::Backend::scripted;
        spec.scripted.script = "inline";
        auto a = std::make_shared<agents::ScriptedAgent>(spec, agents::parse_script(script_text));
        raw.push_back(a.get());
        agents.push_back(a);
    }
    CHECK_THROWS_AS(cmd_debate(cfg, numeric_dataset("q", 1), dir.path() / "out", "", agents), Error);
    for (const auto* a : raw) CHECK(a->requests().empty());
}

TEST_CASE("calibrate then debate with loaded calibrators") {
    TempDir dir("full");
    auto cfg = parse_run_config(kRunToml);
    CalibrateOptions opts;
    opts.agents = cfg.debate.agents;
    opts.mode = {confidence::Method::SV, confidence::Granularity::raw};
    opts.method = calibration::Method::histogram;
    opts.out_dir = dir.path() / "cals";
    REQUIRE(cmd_calibrate(opts, numeric_dataset("v", 200)).ok());

    cfg.debate.calibration_method = calibration::Method::histogram;
    cfg.calibrators_dir = opts.out_dir;
    load_calibrators(cfg);
    CHECK(cfg.debate.calibrators.size() == 2);
    const auto summary = cmd_debate(cfg, numeric_dataset("q", 10), dir.path() / "run");
    CHECK(summary.completed == 10);
}

TEST_CASE("report is deterministic and excludes failures") {
    TempDir dir("rep");
    auto cfg = parse_run_config(kRunToml);
    const auto data = numeric_dataset("q", 30);
    cmd_debate(cfg, data, dir.path());

    // Turn one transcript into a failure.
    const auto file = dir.path() / "transcripts" / transcript_file_name("q5");
    auto t = engine::transcript_from_json(read_file(file));
    t.status = core::TranscriptStatus::failed;
    t.error = "injected";
    write_file(file, engine::transcript_to_json(t));

    const auto r1 = cmd_report(dir.path(), data);
    const auto json1 = read_file(dir.path() / "report.json");
    const auto txt1 = read_file(dir.path() / "report.txt");
    const auto csv1 = read_file(dir.path() / "ece_bins.csv");
    cmd_report(dir.path(), data);
    CHECK(read_file(dir.path() / "report.json") == json1);
    CHECK(read_file(dir.path() / "report.txt") == txt1);
    CHECK(read_file(dir.path() / "ece_bins.csv") == csv1);
    CHECK(r1.failures == 1);
    CHECK(r1.n_questions == 29);
    CHECK(r1.win_rate_per_round.size() == 2);

    auto extra = data;
    extra.push_back(numeric_dataset("z", 1)[0]);
    CHECK(cmd_report(dir.path(), extra).missing_transcripts == 1);
}

TEST_CASE("dataset file round trip through the loader") {
    TempDir dir("ds");
    write_file(dir.path() / "d.jsonl",
               "{\"id\":\"a\",\"question\":\"1+1?\",\"answer\":\"2\",\"kind\":\"numeric\"}\n\n"
               "{\"id\":\"b\",\"question\":\"Pick\",\"answer\":\"B\",\"choices\":[\"x\",\"y\"]}\n");
    const auto d = core::load_dataset(dir.path() / "d.jsonl");
    REQUIRE(d.size() == 2);
    CHECK(d[0].answer_kind == core::AnswerKind::numeric);
    CHECK(d[1].choices.size() == 2);
    CHECK(d[1].answer_kind == core::AnswerKind::multiple_choice);
}

}  // TEST_SUITE
