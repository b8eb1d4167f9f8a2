#include <algorithm>
#include <cmath>

#include "confdebate/calibration/calibration.hpp"
#include "confdebate/core/errors.hpp"

namespace confdebate::calibration {
namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// -log(sigmoid(z)) without overflow.
double softplus_neg(double z) { return std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void require_both_classes(std::span<const LabeledScore> data) {
    const auto positives = std::count_if(data.begin(), data.end(), [](const auto& d) { return d.correct; });
    if (positives == 0 || positives == static_cast<std::ptrdiff_t>(data.size())) {
        throw Error(ErrorCode::DegenerateData, "calibration data needs both correct and incorrect samples");
    }
}

}  // namespace

double platt_objective(const PlattParams& p, std::span<const LabeledScore> data) {
    double nll = 0.0;
    for (const auto& d : data) {
        const double z = p.A * d.score + p.B;
        nll += d.correct ? softplus_neg(z) : softplus_neg(-z);
    }
    return nll + 0.5 * kPlattL2 * (p.A * p.A + p.B * p.B);
}

PlattParams fit_platt(std::span<const LabeledScore> data) {
    require_both_classes(data);
    PlattParams p;
    double f = platt_objective(p, data);
    for (int iter = 0; iter < kPlattMaxIterations; ++iter) {
        double gA = kPlattL2 * p.A;
        double gB = kPlattL2 * p.B;
        double hAA = kPlattL2;
        double hAB = 0.0;
        double hBB = kPlattL2;
        for (const auto& d : data) {
            const double q = sigmoid(p.A * d.score + p.B);
            const double r = q - (d.correct ? 1.0 : 0.0);
            const double w = q * (1.0 - q);
            gA += r * d.score;
            gB += r;
            hAA += w * d.score * d.score;
            hAB += w * d.score;
            hBB += w;
        }
        const double det = hAA * hBB - hAB * hAB;
        if (!(det > 0.0)) break;
        const double stepA = -(hBB * gA - hAB * gB) / det;
        const double stepB = -(hAA * gB - hAB * gA) / det;

        // Backtracking keeps the iteration monotone on nearly separable data.
        double t = 1.0;
        PlattParams next;
        double f_next = f;
        for (int k = 0; k < 50; ++k, t *= 0.5) {
            next = {std::clamp(p.A + t * stepA, -kPlattBound, kPlattBound),
                    std::clamp(p.B + t * stepB, -kPlattBound, kPlattBound)};
            f_next = platt_objective(next, data);
            if (f_next <= f + 1e-4 * t * (gA * stepA + gB * stepB)) break;
        }
        const double change = std::max(std::abs(next.A - p.A), std::abs(next.B - p.B));
        p = next;
        f = f_next;
        if (change < kPlattTolerance) break;
    }
    return p;
}

core::ConfidenceScore apply_platt(const PlattParams& p, core::ConfidenceScore s) {
    return core::ConfidenceScore(sigmoid(p.A * s.value() + p.B));
}

}  // namespace confdebate::calibration
