#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "confdebate/calibration/calibration.hpp"
#include "confdebate/core/errors.hpp"

namespace confdebate::calibration {

using nlohmann::json;

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::vanilla: return "vanilla";
        case Method::platt: return "platt";
        case Method::histogram: return "histogram";
        case Method::temperature: return "temperature";
    }
    return "vanilla";
}

Method method_from_string(std::string_view s) {
    if (s == "vanilla") return Method::vanilla;
    if (s == "platt") return Method::platt;
    if (s == "histogram") return Method::histogram;
    if (s == "temperature") return Method::temperature;
    throw Error(ErrorCode::Format, "unknown calibration method '" + std::string(s) + "'");
}

Calibrator::Calibrator(Method method, Params params, Provenance provenance)
    : method_(method), params_(std::move(params)), provenance_(std::move(provenance)) {
    const bool agrees = (method == Method::vanilla && std::holds_alternative<std::monostate>(params_)) ||
                        (method == Method::platt && std::holds_alternative<PlattParams>(params_)) ||
                        (method == Method::histogram && std::holds_alternative<HistogramParams>(params_)) ||
                        (method == Method::temperature && std::holds_alternative<TemperatureParams>(params_));
    if (!agrees) throw Error(ErrorCode::Format, "calibrator params do not match method");
}

Calibrator Calibrator::vanilla(Provenance provenance) {
    return Calibrator(Method::vanilla, std::monostate{}, std::move(provenance));
}

core::ConfidenceScore Calibrator::apply(core::ConfidenceScore raw) const {
    switch (method_) {
        case Method::vanilla: return raw;
        case Method::platt: return apply_platt(std::get<PlattParams>(params_), raw);
        case Method::histogram: return apply_histogram(std::get<HistogramParams>(params_), raw);
        case Method::temperature: break;
    }
    throw Error(ErrorCode::IncompatibleCalibrator, "temperature calibration needs answer-token logprobs");
}

core::ConfidenceScore calibrate(const Calibrator& c, const core::DebateTurn& turn,
                                confidence::Granularity granularity) {
    if (!turn.conf_raw) throw Error(ErrorCode::IncompatibleCalibrator, "turn carries no confidence");
    switch (c.method()) {
        case Method::vanilla:
            return *turn.conf_raw;
        case Method::platt:
        case Method::histogram: {
            const auto input = granularity == confidence::Granularity::categorical
                                   ? confidence::coarsen_categorical(*turn.conf_raw)
                                   : *turn.conf_raw;
            return c.apply(input);
        }
        case Method::temperature: {
            if (!turn.answer_tokens || turn.answer_tokens->empty()) {
                throw Error(ErrorCode::IncompatibleCalibrator,
                            "temperature calibration needs an LN turn with answer-token logprobs");
            }
            const double T = std::get<TemperatureParams>(c.params()).T;
            return core::ConfidenceScore(rescaled_ln_confidence(*turn.answer_tokens, T));
        }
    }
    return *turn.conf_raw;
}

std::string calibrator_to_json(const Calibrator& c) {
    json params = json::object();
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, PlattParams>) {
                params = {{"A", p.A}, {"B", p.B}};
            } else if constexpr (std::is_same_v<P, HistogramParams>) {
                params = {{"bin_edges", p.bin_edges}, {"bin_values", p.bin_values}, {"fallback_value", p.fallback_value}};
            } else if constexpr (std::is_same_v<P, TemperatureParams>) {
                params = {{"T", p.T}};
            }
        },
        c.params());
    const auto& pv = c.provenance();
    json doc = {
        {"method", to_string(c.method())},
        {"params", params},
        {"provenance",
         {{"model_id", pv.model_id},
          {"dataset_id", pv.dataset_id},
          {"confidence_mode", confidence::to_string(pv.confidence_mode.method)},
          {"granularity", confidence::to_string(pv.confidence_mode.granularity)},
          {"n_samples", pv.n_samples},
          {"fitted_at", pv.fitted_at}}},
    };
    return doc.dump(2) + "\n";
}

namespace {

double finite_number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw Error(ErrorCode::Format, std::string("calibrator params missing numeric '") + key + "'");
    }
    const double v = j[key].get<double>();
    if (!std::isfinite(v)) throw Error(ErrorCode::Format, std::string("non-finite '") + key + "'");
    return v;
}

HistogramParams histogram_from_json(const json& p) {
    HistogramParams h;
    h.bin_edges = p.at("bin_edges").get<std::vector<double>>();
    h.bin_values = p.at("bin_values").get<std::vector<double>>();
    h.fallback_value = finite_number(p, "fallback_value");
    if (h.bin_values.empty() || h.bin_edges.size() != h.bin_values.size() + 1) {
        throw Error(ErrorCode::Format, "histogram needs one value per bin and bins+1 edges");
    }
    if (h.bin_edges.front() != 0.0 || h.bin_edges.back() != 1.0) {
        throw Error(ErrorCode::Format, "histogram edges must span [0,1]");
    }
    for (std::size_t i = 1; i < h.bin_edges.size(); ++i) {
        if (!(h.bin_edges[i] > h.bin_edges[i - 1])) throw Error(ErrorCode::Format, "histogram edges not increasing");
    }
    for (double v : h.bin_values) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::Format, "histogram value outside [0,1]");
    }
    return h;
}

}  // namespace

Calibrator calibrator_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Format, std::string("calibrator file is not JSON: ") + e.what());
    }
    try {
        const Method method = method_from_string(doc.at("method").get<std::string>());
        const json& p = doc.contains("params") ? doc["params"] : json::object();
        Params params;
        switch (method) {
            case Method::vanilla: params = std::monostate{}; break;
            case Method::platt: {
                PlattParams pp{finite_number(p, "A"), finite_number(p, "B")};
                if (std::abs(pp.A) > kPlattBound || std::abs(pp.B) > kPlattBound) {
                    throw Error(ErrorCode::Format, "Platt parameters out of bounds");
                }
                params = pp;
                break;
            }
            case Method::histogram: params = histogram_from_json(p); break;
            case Method::temperature: {
                TemperatureParams tp{finite_number(p, "T")};
                if (tp.T < kTemperatureMin || tp.T > kTemperatureMax) {
                    throw Error(ErrorCode::Format, "temperature outside search bounds");
                }
                params = tp;
                break;
            }
        }
        Provenance pv;
        if (doc.contains("provenance")) {
            const json& j = doc["provenance"];
            pv.model_id = j.value("model_id", "");
            pv.dataset_id = j.value("dataset_id", "");
            pv.confidence_mode.method = confidence::method_from_string(j.value("confidence_mode", "sv"));
            pv.confidence_mode.granularity = confidence::granularity_from_string(j.value("granularity", "raw"));
            pv.n_samples = j.value("n_samples", std::size_t{0});
            pv.fitted_at = j.value("fitted_at", "");
        }
        return Calibrator(method, std::move(params), std::move(pv));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Format, std::string("malformed calibrator: ") + e.what());
    }
}

void save_calibrator(const Calibrator& c, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << calibrator_to_json(c);
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Calibrator load_calibrator(const std::filesystem::path& path, std::optional<confidence::ConfidenceMode> expected_mode,
                           std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    Calibrator c = calibrator_from_json(buf.str());
    if (expected_mode && c.provenance().confidence_mode != *expected_mode && warnings != nullptr) {
        warnings->push_back(path.string() + ": calibrator was fitted for confidence mode '" +
                            std::string(confidence::to_string(c.provenance().confidence_mode.method)) + "/" +
                            std::string(confidence::to_string(c.provenance().confidence_mode.granularity)) +
                            "' but the run uses '" + std::string(confidence::to_string(expected_mode->method)) + "/" +
                            std::string(confidence::to_string(expected_mode->granularity)) + "'");
    }
    return c;
}

}  // namespace confdebate::calibration
