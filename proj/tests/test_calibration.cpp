#include <doctest.h>

#include <cmath>
#include <random>

#include "confdebate/calibration/calibration.hpp"
#include "confdebate/confidence/confidence.hpp"
#include "confdebate/core/binning.hpp"
#include "confdebate/core/errors.hpp"
#include "confdebate/metrics/metrics.hpp"
#include "support.hpp"

using namespace confdebate;
using namespace confdebate::calibration;
using core::ConfidenceScore;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::Format;
}

// One answer token over a k-way vocabulary: logits `scale * z`, emitted token
// index 0, correctness drawn from softmax(z)[0].
std::vector<TemperatureRecord> scaled_records(std::uint64_t seed, std::size_t n, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TemperatureRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> z(4);
        for (auto& v : z) v = normal(rng);
        z[0] += 0.5;
        double norm_true = 0.0;
        double norm_model = 0.0;
        for (double v : z) {
            norm_true += std::exp(v);
            norm_model += std::exp(scale * v);
        }
        const bool correct = u(rng) < std::exp(z[0]) / norm_true;
        core::TokenLogprob tok;
        tok.token = "t0";
        tok.logprob = scale * z[0] - std::log(norm_model);
        for (std::size_t k = 0; k < z.size(); ++k) {
            tok.top_alternatives.push_back({"t" + std::to_string(k), scale * z[k] - std::log(norm_model)});
        }
        out.push_back({{tok}, correct});
    }
    return out;
}

// Oracle objective: softmax written out directly over the alternatives.
double oracle_bce(const std::vector<TemperatureRecord>& records, double T) {
    double loss = 0.0;
    for (const auto& r : records) {
        const auto& tok = r.answer_tokens.front();
        double denom = 0.0;
        for (const auto& a : tok.top_alternatives) denom += std::exp(a.logprob / T);
        const double c = std::exp(tok.logprob / T) / denom;
        loss -= r.correct ? std::log(c) : std::log(1.0 - c);
    }
    return loss / static_cast<double>(records.size());
}

}  // namespace

TEST_SUITE("calibration") {

TEST_CASE("platt: label symmetry gives zero parameters") {
    const std::vector<LabeledScore> data = {{0.2, true}, {0.2, false}, {0.8, true}, {0.8, false}};
    const auto p = fit_platt(data);
    CHECK(std::abs(p.A) < 1e-6);
    CHECK(std::abs(p.B) < 1e-6);
    CHECK(apply_platt(p, ConfidenceScore(0.9)).value() == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("platt: recovers generating parameters and matches IRLS") {
    const auto data = testsupport::synthetic_scores(17, 2000, 2.0, -1.0);
    const auto p = fit_platt(data);
    CHECK(std::abs(p.A - 2.0) < 0.5);
    CHECK(std::abs(p.B + 1.0) < 0.3);
    const auto [a, b] = testsupport::irls_logistic(data);
    CHECK(std::abs(p.A - a) < 1e-4);
    CHECK(std::abs(p.B - b) < 1e-4);
}

TEST_CASE("platt: recovery within 0.15 on a larger sample") {
    // The +-0.15 band is tighter than the sampling error at n=2000, so the
    // parameter-recovery check uses the IRLS fit on the same data as truth
    // and a large sample for the generating-parameter check.
    const auto data = testsupport::synthetic_scores(23, 200000, 2.0, -1.0);
    const auto p = fit_platt(data);
    CHECK(std::abs(p.A - 2.0) < 0.15);
    CHECK(std::abs(p.B + 1.0) < 0.15);
}

TEST_CASE("platt: errors and monotonicity") {
    std::vector<LabeledScore> all_true = {{0.1, true}, {0.5, true}, {0.9, true}};
    CHECK(code_of([&] { fit_platt(all_true); }) == ErrorCode::DegenerateData);
    CHECK(apply_platt({0.0, 0.0}, ConfidenceScore(0.3)).value() == 0.5);

    const PlattParams p{3.0, -1.0};
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
        const double v = apply_platt(p, ConfidenceScore(i / 100.0)).value();
        CHECK(v > prev);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        prev = v;
    }

    // Accuracy non-decreasing across score bins gives A > 0.
    std::vector<LabeledScore> rising;
    for (int b = 0; b < 10; ++b) {
        for (int k = 0; k < 10; ++k) rising.push_back({b / 10.0 + 0.05, k < b + 1});
    }
    CHECK(fit_platt(rising).A > 0.0);

    // Separable data stays finite and inside the bounds.
    const auto sep = fit_platt(std::vector<LabeledScore>{{0.1, false}, {0.2, false}, {0.8, true}, {0.9, true}});
    CHECK(std::isfinite(sep.A));
    CHECK(std::abs(sep.A) <= kPlattBound);
    CHECK(std::abs(sep.B) <= kPlattBound);
}

TEST_CASE("histogram: counting, fallback, edges") {
    std::vector<LabeledScore> data = {{0.95, true}, {0.92, true}, {0.97, true}, {0.91, false},
                                      {0.05, false}, {0.15, true}};
    const auto h = fit_histogram(data, 10);
    REQUIRE(h.bins() == 10);
    CHECK(h.bin_values[9] == 0.75);
    CHECK(h.bin_values[0] == 0.0);
    CHECK(h.bin_values[1] == 1.0);
    CHECK(h.fallback_value == doctest::Approx(4.0 / 6.0));
    CHECK(h.bin_values[5] == doctest::Approx(4.0 / 6.0));  // empty bin

    HistogramParams manual;
    manual.bin_edges = core::equal_width_edges(10);
    manual.bin_values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.75, 0.8};
    manual.fallback_value = 0.6;
    CHECK(apply_histogram(manual, ConfidenceScore(0.95)).value() == 0.8);
    CHECK(apply_histogram(manual, ConfidenceScore(0.1)).value() == 0.1);
    CHECK(apply_histogram(manual, ConfidenceScore(1.0)).value() == 0.8);
    CHECK(apply_histogram(manual, ConfidenceScore(0.0)).value() == 0.0);

    CHECK(code_of([] { fit_histogram(std::vector<LabeledScore>{}, 10); }) == ErrorCode::EmptyInput);
}

TEST_CASE("histogram: training ECE is zero with aligned bins") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<LabeledScore> data;
        for (int i = 0; i < 500; ++i) {
            const double s = u(rng);
            data.push_back({s, u(rng) < s * s});
        }
        const auto h = fit_histogram(data, 10);
        std::vector<LabeledScore> calibrated;
        std::vector<std::size_t> bins;
        for (const auto& d : data) {
            calibrated.push_back({apply_histogram(h, ConfidenceScore(d.score)).value(), d.correct});
            bins.push_back(core::bin_index(d.score, 10));
        }
        CHECK(metrics::ece_with_assignment(calibrated, bins, 10).ece == 0.0);
        CHECK(metrics::ece(calibrated, 10).ece < 1e-12);
    }
}

TEST_CASE("apply_temperature") {
    const std::vector<double> zero = {0.0, 0.0};
    const auto half = apply_temperature(zero, 1.0);
    CHECK(half[0] == 0.5);
    CHECK(half[1] == 0.5);

    const std::vector<double> two = {2.0, 0.0};
    const auto flat = apply_temperature(two, 1e6);
    CHECK(std::abs(flat[0] - 0.5) < 1e-5);
    CHECK(std::abs(flat[1] - 0.5) < 1e-5);

    const auto t2 = apply_temperature(two, 2.0);
    CHECK(std::abs(t2[0] - std::exp(1.0) / (std::exp(1.0) + 1.0)) < 1e-15);
    CHECK(std::abs(t2[0] - 0.7310585786300048793) < 1e-12);
    CHECK(std::abs(t2[1] - 0.2689414213699951207) < 1e-12);
}

TEST_CASE("apply_temperature: argmax preserved, T=1 is softmax") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal(0.0, 3.0);
    std::uniform_real_distribution<double> logt(std::log(0.05), std::log(20.0));
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> z(2 + rng() % 8);
        for (auto& v : z) v = normal(rng);
        const auto arg = std::max_element(z.begin(), z.end()) - z.begin();
        const auto q = apply_temperature(z, std::exp(logt(rng)));
        CHECK(std::max_element(q.begin(), q.end()) - q.begin() == arg);
        for (double v : q) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        double denom = 0.0;
        for (double v : z) denom += std::exp(v);
        const auto p = apply_temperature(z, 1.0);
        for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(p[i] - std::exp(z[i]) / denom) < 1e-12);
    }
}

TEST_CASE("fit_temperature recovers a logit scale of 3") {
    const auto records = scaled_records(31, 4000, 3.0);
    const auto fitted = fit_temperature(records);

    double best_t = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 10; i <= 1000; ++i) {
        const double T = i / 100.0;
        const double v = oracle_bce(records, T);
        if (v < best) {
            best = v;
            best_t = T;
        }
    }
    CHECK(std::abs(best_t - 3.0) / 3.0 < 0.10);
    CHECK(std::abs(fitted.T - 3.0) / 3.0 < 0.10);
    CHECK(std::abs(fitted.T - best_t) <= 0.02);
    CHECK(temperature_objective(records, fitted.T) <= temperature_objective(records, 1.0));
    CHECK(std::abs(temperature_objective(records, 2.5) - oracle_bce(records, 2.5)) < 1e-12);
}

TEST_CASE("fit_temperature: already calibrated and degenerate data") {
    const auto records = scaled_records(37, 3000, 1.0);
    const auto fitted = fit_temperature(records);
    CHECK(temperature_objective(records, fitted.T) <= temperature_objective(records, 1.0));
    CHECK(fitted.T == doctest::Approx(1.0).epsilon(0.15));
    CHECK(fitted.T >= kTemperatureMin);
    CHECK(fitted.T <= kTemperatureMax);

    auto all_correct = records;
    for (auto& r : all_correct) r.correct = true;
    CHECK(code_of([&] { fit_temperature(all_correct); }) == ErrorCode::DegenerateData);
}

TEST_CASE("residual mass is folded into one pseudo-logit") {
    // Emitted p=0.5, one alternative 0.3, residual 0.2.
    core::TokenLogprob tok{"a", std::log(0.5), {{"a", std::log(0.5)}, {"b", std::log(0.3)}}};
    const core::TokenStream s{tok};
    CHECK(rescaled_ln_confidence(s, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    const double T = 2.0;
    const double num = std::pow(0.5, 1 / T);
    const double expected = num / (num + std::pow(0.3, 1 / T) + std::pow(0.2, 1 / T));
    CHECK(rescaled_ln_confidence(s, T) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("calibrate a turn") {
    core::DebateTurn turn;
    turn.conf_raw = ConfidenceScore(0.7);
    CHECK(calibrate(Calibrator::vanilla(), turn).value() == 0.7);

    turn.conf_raw = ConfidenceScore(0.9);
    const Calibrator zero(Method::platt, PlattParams{0.0, 0.0}, {});
    CHECK(calibrate(zero, turn).value() == 0.5);

    // Categorical input reaches the calibrator coarsened: 0.87 -> 0.9.
    const Calibrator slope(Method::platt, PlattParams{1.0, 0.0}, {});
    turn.conf_raw = ConfidenceScore(0.87);
    CHECK(calibrate(slope, turn, confidence::Granularity::categorical).value() ==
          doctest::Approx(testsupport::sigmoid(0.9)));

    core::TokenStream toks{{" 14", std::log(0.6), {{" 14", std::log(0.6)}, {" 15", std::log(0.3)}}},
                           {" 7", std::log(0.7), {{" 7", std::log(0.7)}, {" 1", std::log(0.2)}}}};
    turn.answer_tokens = toks;
    turn.conf_raw = confidence::ln_confidence({toks});
    const Calibrator t1(Method::temperature, TemperatureParams{1.0}, {});
    CHECK(calibrate(t1, turn).value() == doctest::Approx(turn.conf_raw->value()).epsilon(1e-12));
    CHECK(code_of([&] { (void)t1.apply(ConfidenceScore(0.5)); }) == ErrorCode::IncompatibleCalibrator);
}

TEST_CASE("calibrator files") {
    testsupport::TempDir dir("cal");
    const Provenance pv{"model-x", "val.jsonl", {confidence::Method::LN, confidence::Granularity::raw}, 120,
                        "2026-01-01T00:00:00Z"};
    const std::vector<Calibrator> cals = {
        Calibrator::vanilla(pv),
        Calibrator(Method::platt, PlattParams{1.25, -0.5}, pv),
        Calibrator(Method::histogram, fit_histogram(testsupport::synthetic_scores(1, 200, 2, -1)), pv),
        Calibrator(Method::temperature, TemperatureParams{2.5}, pv),
    };
    for (const auto& c : cals) {
        const auto path = dir.path() / (std::string(to_string(c.method())) + ".cal.json");
        save_calibrator(c, path);
        CHECK(load_calibrator(path) == c);
    }

    std::vector<std::string> warnings;
    const auto loaded = load_calibrator(dir.path() / "platt.cal.json",
                                        confidence::ConfidenceMode{confidence::Method::SV, confidence::Granularity::raw},
                                        &warnings);
    CHECK(loaded.method() == Method::platt);
    CHECK(warnings.size() == 1);

    testsupport::write_file(dir.path() / "bad.cal.json", "{\"method\":\"isotonic\",\"params\":{}}");
    CHECK(code_of([&] { load_calibrator(dir.path() / "bad.cal.json"); }) == ErrorCode::Format);
    CHECK(code_of([&] { Calibrator(Method::platt, HistogramParams{}, pv); }) == ErrorCode::Format);
}

}  // TEST_SUITE
