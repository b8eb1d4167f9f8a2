#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "confdebate/confidence/confidence.hpp"
#include "confdebate/core/types.hpp"

namespace confdebate::calibration {

struct LabeledScore {
    double score = 0.0;
    bool correct = false;
};

struct PlattParams {
    double A = 0.0;
    double B = 0.0;

    friend bool operator==(const PlattParams&, const PlattParams&) = default;
};

struct HistogramParams {
    std::vector<double> bin_edges;
    std::vector<double> bin_values;
    double fallback_value = 0.0;

    [[nodiscard]] std::size_t bins() const noexcept { return bin_values.size(); }
    friend bool operator==(const HistogramParams&, const HistogramParams&) = default;
};

struct TemperatureParams {
    double T = 1.0;

    friend bool operator==(const TemperatureParams&, const TemperatureParams&) = default;
};

inline constexpr double kPlattL2 = 1e-6;
inline constexpr double kPlattBound = 1e3;
inline constexpr int kPlattMaxIterations = 200;
inline constexpr double kPlattTolerance = 1e-8;
inline constexpr double kTemperatureMin = 0.05;
inline constexpr double kTemperatureMax = 20.0;
inline constexpr double kTemperatureTolerance = 1e-4;
inline constexpr std::size_t kDefaultHistogramBins = 10;

/// Logistic fit of P(correct | s) = sigmoid(A s + B) by Newton iterations on
/// the L2-penalized (lambda = 1e-6) negative log-likelihood.
/// Throws Error(DegenerateData) when only one label class is present.
PlattParams fit_platt(std::span<const LabeledScore> data);
core::ConfidenceScore apply_platt(const PlattParams& p, core::ConfidenceScore s);

/// Penalized negative log-likelihood minimized by fit_platt.
double platt_objective(const PlattParams& p, std::span<const LabeledScore> data);

/// Equal-width binning; each bin maps to its empirical accuracy, empty
/// bins to the global accuracy. Throws Error(EmptyInput) on empty data.
HistogramParams fit_histogram(std::span<const LabeledScore> data, std::size_t bins = kDefaultHistogramBins);
core::ConfidenceScore apply_histogram(const HistogramParams& p, core::ConfidenceScore s);

/// Softmax of logits / T with max subtraction.
std::vector<double> apply_temperature(std::span<const double> logits, double T);

/// Answer tokens of one labeled turn, with per-token alternatives.
struct TemperatureRecord {
    core::TokenStream answer_tokens;
    bool correct = false;
};

/// LN confidence recomputed after scaling each answer token's logit set by
/// 1/T. The logit set is the emitted token plus its alternatives; probability
/// mass not covered by them is folded into one pseudo-logit.
double rescaled_ln_confidence(const core::TokenStream& answer_tokens, double T);

/// Mean binary cross-entropy of rescaled LN confidence against correctness.
double temperature_objective(std::span<const TemperatureRecord> records, double T);

/// Golden-section search over log T in [0.05, 20]. The returned T never
/// scores worse than T = 1. Throws Error(DegenerateData) on one class.
TemperatureParams fit_temperature(std::span<const TemperatureRecord> records);

enum class Method { vanilla, platt, histogram, temperature };

std::string_view to_string(Method m) noexcept;
Method method_from_string(std::string_view s);

struct Provenance {
    std::string model_id;
    std::string dataset_id;
    confidence::ConfidenceMode confidence_mode;
    std::size_t n_samples = 0;
    std::string fitted_at;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

using Params = std::variant<std::monostate, PlattParams, HistogramParams, TemperatureParams>;

/// A fitted calibration model. Immutable once built; safe to share.
class Calibrator {
public:
    Calibrator() = default;
    Calibrator(Method method, Params params, Provenance provenance);

    static Calibrator vanilla(Provenance provenance = {});

    [[nodiscard]] Method method() const noexcept { return method_; }
    [[nodiscard]] const Params& params() const noexcept { return params_; }
    [[nodiscard]] const Provenance& provenance() const noexcept { return provenance_; }

    /// Maps a raw score; temperature calibrators need token data, so this
    /// throws IncompatibleCalibrator for them.
    [[nodiscard]] core::ConfidenceScore apply(core::ConfidenceScore raw) const;

    friend bool operator==(const Calibrator&, const Calibrator&) = default;

private:
    Method method_ = Method::vanilla;
    Params params_;
    Provenance provenance_;
};

/// Calibrated confidence of a turn. Categorical granularity coarsens the raw
/// score before it reaches a score-based calibrator; temperature recomputes
/// LN from the turn's answer tokens.
core::ConfidenceScore calibrate(const Calibrator& c, const core::DebateTurn& turn,
                                confidence::Granularity granularity = confidence::Granularity::raw);

void save_calibrator(const Calibrator& c, const std::filesystem::path& path);

/// Loads a `.cal.json` file. A provenance confidence mode that differs from
/// `expected_mode` is reported through `warnings` and does not fail.
Calibrator load_calibrator(const std::filesystem::path& path,
                           std::optional<confidence::ConfidenceMode> expected_mode = std::nullopt,
                           std::vector<std::string>* warnings = nullptr);

std::string calibrator_to_json(const Calibrator& c);
Calibrator calibrator_from_json(std::string_view text);

}  // namespace confdebate::calibration
