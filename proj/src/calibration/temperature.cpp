#include <algorithm>
#include <cmath>
#include <limits>

#include "confdebate/calibration/calibration.hpp"
#include "confdebate/core/errors.hpp"

namespace confdebate::calibration {
namespace {

constexpr double kProbFloor = 1e-12;

// Emitted token first, then distinct alternatives, then the residual mass.
std::vector<double> logit_set(const core::TokenLogprob& tok) {
    std::vector<double> logits{tok.logprob};
    double covered = std::exp(tok.logprob);
    for (const auto& alt : tok.top_alternatives) {
        if (alt.token == tok.token) continue;
        logits.push_back(alt.logprob);
        covered += std::exp(alt.logprob);
    }
    const double residual = 1.0 - covered;
    if (residual > kProbFloor) logits.push_back(std::log(residual));
    return logits;
}

}  // namespace

std::vector<double> apply_temperature(std::span<const double> logits, double T) {
    if (logits.empty()) throw Error(ErrorCode::EmptyInput, "softmax of no logits");
    if (!(T > 0.0)) throw Error(ErrorCode::Config, "temperature must be positive");
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp((logits[i] - top) / T);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

double rescaled_ln_confidence(const core::TokenStream& answer_tokens, double T) {
    if (answer_tokens.empty()) throw Error(ErrorCode::SpanNotFound, "no answer tokens to rescale");
    double log_sum = 0.0;
    for (const auto& tok : answer_tokens) {
        const auto logits = logit_set(tok);
        const double p = apply_temperature(logits, T).front();
        log_sum += std::log(std::max(p, kProbFloor));
    }
    return std::min(std::exp(log_sum / static_cast<double>(answer_tokens.size())), 1.0);
}

double temperature_objective(std::span<const TemperatureRecord> records, double T) {
    double loss = 0.0;
    for (const auto& r : records) {
        const double c = std::clamp(rescaled_ln_confidence(r.answer_tokens, T), kProbFloor, 1.0 - kProbFloor);
        loss -= r.correct ? std::log(c) : std::log1p(-c);
    }
    return loss / static_cast<double>(records.size());
}

TemperatureParams fit_temperature(std::span<const TemperatureRecord> records) {
    const auto positives =
        std::count_if(records.begin(), records.end(), [](const auto& r) { return r.correct; });
    if (positives == 0 || positives == static_cast<std::ptrdiff_t>(records.size())) {
        throw Error(ErrorCode::DegenerateData, "temperature fitting needs both correct and incorrect samples");
    }

    auto objective = [&](double log_t) { return temperature_objective(records, std::exp(log_t)); };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = std::log(kTemperatureMin);
    double hi = std::log(kTemperatureMax);
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = objective(x1);
    double f2 = objective(x2);
    while (hi - lo > kTemperatureTolerance) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }

    // The objective need not be unimodal; keep the best of the bracket
    // result, the identity and both bounds.
    double best_t = std::exp(0.5 * (lo + hi));
    double best_f = objective(0.5 * (lo + hi));
    for (double t : {1.0, kTemperatureMin, kTemperatureMax}) {
        const double f = objective(std::log(t));
        if (f < best_f) {
            best_f = f;
            best_t = t;
        }
    }
    return TemperatureParams{std::clamp(best_t, kTemperatureMin, kTemperatureMax)};
}

}  // namespace confdebate::calibration
