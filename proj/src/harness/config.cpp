#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <toml.hpp>

#include "confdebate/core/errors.hpp"
#include "confdebate/core/seed.hpp"
#include "confdebate/harness/harness.hpp"

namespace confdebate::harness {

using nlohmann::ordered_json;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::Config, where + ": " + what);
}

void reject_unknown(const toml::table& t, std::initializer_list<std::string_view> allowed, const std::string& where) {
    const std::set<std::string_view> ok(allowed);
    for (const auto& [key, node] : t) {
        if (!ok.contains(key.str())) config_error(where, "unknown key '" + std::string(key.str()) + "'");
    }
}

template <class T>
void read(const toml::table& t, std::string_view key, T& out, const std::string& where) {
    const toml::node* node = t.get(key);
    if (node == nullptr) return;
    if constexpr (std::is_same_v<T, std::string>) {
        const auto v = node->value<std::string>();
        if (!v) config_error(where, std::string(key) + " must be a string");
        out = *v;
    } else if constexpr (std::is_same_v<T, bool>) {
        const auto v = node->value<bool>();
        if (!v) config_error(where, std::string(key) + " must be a boolean");
        out = *v;
    } else if constexpr (std::is_floating_point_v<T>) {
        const auto v = node->value<double>();  // integers convert
        if (!v) config_error(where, std::string(key) + " must be a number");
        out = *v;
    } else {
        const auto v = node->value<std::int64_t>();
        if (!v) config_error(where, std::string(key) + " must be an integer");
        out = static_cast<T>(*v);
    }
}

const toml::table* subtable(const toml::table& t, std::string_view key, const std::string& where) {
    const toml::node* node = t.get(key);
    if (node == nullptr) return nullptr;
    const toml::table* sub = node->as_table();
    if (sub == nullptr) config_error(where, std::string(key) + " must be a table");
    return sub;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

toml::table parse_toml(std::string_view text) {
    try {
        return toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream ss;
        ss << "TOML line " << e.source().begin.line << ": " << e.description();
        throw Error(ErrorCode::Config, ss.str());
    }
}

agents::AgentSpec agent_from_toml(const toml::table& t, std::size_t index, const fs::path& base_dir,
                                  std::optional<fs::path>* calibrator) {
    std::string where = "agents[" + std::to_string(index) + "]";
    reject_unknown(t, {"id", "name", "backend", "calibrator", "remote", "scripted", "simulated"}, where);
    agents::AgentSpec spec;
    read(t, "id", spec.agent_id, where);
    if (spec.agent_id.empty()) config_error(where, "id is required");
    where = "agent '" + spec.agent_id + "'";
    read(t, "name", spec.display_name, where);
    std::string backend = "simulated";
    read(t, "backend", backend, where);
    try {
        spec.backend = agents::backend_from_string(backend);
    } catch (const Error& e) {
        config_error(where, e.what());
    }
    if (calibrator != nullptr && t.contains("calibrator")) {
        std::string p;
        read(t, "calibrator", p, where);
        *calibrator = resolve(base_dir, p);
    }
    if (const auto* r = subtable(t, "remote", where)) {
        reject_unknown(*r,
                       {"base_url", "model", "api_key_env", "top_logprobs", "timeout_s", "max_retries",
                        "backoff_base_s", "backoff_factor", "temperature", "max_tokens"},
                       where + ".remote");
        auto& c = spec.remote;
        read(*r, "base_url", c.base_url, where);
        read(*r, "model", c.model, where);
        read(*r, "api_key_env", c.api_key_env, where);
        read(*r, "top_logprobs", c.top_logprobs, where);
        read(*r, "timeout_s", c.timeout_s, where);
        read(*r, "max_retries", c.max_retries, where);
        read(*r, "backoff_base_s", c.backoff_base_s, where);
        read(*r, "backoff_factor", c.backoff_factor, where);
        read(*r, "temperature", c.temperature, where);
        if (r->contains("max_tokens")) {
            int m = 0;
            read(*r, "max_tokens", m, where);
            c.max_tokens = m;
        }
    }
    if (const auto* s = subtable(t, "scripted", where)) {
        reject_unknown(*s, {"script"}, where + ".scripted");
        std::string script;
        read(*s, "script", script, where);
        spec.scripted.script = resolve(base_dir, script);
    }
    if (const auto* s = subtable(t, "simulated", where)) {
        reject_unknown(*s,
                       {"base_accuracy", "confidence_sharpness", "persuadability", "miscalibration_bias",
                        "n_distractors"},
                       where + ".simulated");
        auto& c = spec.simulated;
        read(*s, "base_accuracy", c.base_accuracy, where);
        read(*s, "confidence_sharpness", c.confidence_sharpness, where);
        read(*s, "persuadability", c.persuadability, where);
        read(*s, "miscalibration_bias", c.miscalibration_bias, where);
        read(*s, "n_distractors", c.n_distractors, where);
    }
    spec.validate();
    return spec;
}

std::vector<agents::AgentSpec> agents_from(const toml::table& root, const fs::path& base_dir,
                                           std::map<std::string, fs::path>* calibrators) {
    const toml::node* node = root.get("agents");
    if (node == nullptr) throw Error(ErrorCode::Config, "no [[agents]] entries");
    const toml::array* arr = node->as_array();
    if (arr == nullptr || arr->empty()) throw Error(ErrorCode::Config, "agents must be a non-empty array of tables");
    std::vector<agents::AgentSpec> out;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < arr->size(); ++i) {
        const toml::table* t = (*arr)[i].as_table();
        if (t == nullptr) throw Error(ErrorCode::Config, "agents[" + std::to_string(i) + "] must be a table");
        std::optional<fs::path> cal;
        out.push_back(agent_from_toml(*t, i, base_dir, calibrators ? &cal : nullptr));
        if (!ids.insert(out.back().agent_id).second) {
            throw Error(ErrorCode::Config, "duplicate agent id '" + out.back().agent_id + "'");
        }
        if (cal) (*calibrators)[out.back().agent_id] = *cal;
    }
    return out;
}

ordered_json agent_json(const agents::AgentSpec& a) {
    ordered_json j{{"id", a.agent_id}, {"name", a.display_name}, {"backend", agents::to_string(a.backend)}};
    switch (a.backend) {
        case agents::Backend::remote: {
            const auto& r = a.remote;
            j["remote"] = {{"base_url", r.base_url},
                           {"model", r.model},
                           {"api_key_env", r.api_key_env},
                           {"top_logprobs", r.top_logprobs},
                           {"timeout_s", r.timeout_s},
                           {"max_retries", r.max_retries},
                           {"backoff_base_s", r.backoff_base_s},
                           {"backoff_factor", r.backoff_factor},
                           {"temperature", r.temperature},
                           {"max_tokens", r.max_tokens ? ordered_json(*r.max_tokens) : ordered_json(nullptr)}};
            break;
        }
        case agents::Backend::scripted: {
            // The table contents matter, not where the file lives.
            std::string digest;
            try {
                digest = read_text(a.scripted.script);
            } catch (const Error&) {
                digest = a.scripted.script.generic_string();
            }
            j["scripted"] = {{"script_fnv1a64", core::fnv1a64(digest)}};
            break;
        }
        case agents::Backend::simulated: {
            const auto& s = a.simulated;
            j["simulated"] = {{"base_accuracy", s.base_accuracy},
                              {"confidence_sharpness", s.confidence_sharpness},
                              {"persuadability", s.persuadability},
                              {"miscalibration_bias", s.miscalibration_bias},
                              {"n_distractors", s.n_distractors}};
            break;
        }
    }
    return j;
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::Config, "SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

}  // namespace

std::vector<agents::AgentSpec> parse_agents_toml(std::string_view text, const fs::path& base_dir) {
    return agents_from(parse_toml(text), base_dir, nullptr);
}

std::vector<agents::AgentSpec> load_agents_toml(const fs::path& path) {
    return parse_agents_toml(read_text(path), path.parent_path());
}

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
    const toml::table root = parse_toml(text);
    reject_unknown(root, {"agents", "debate"}, "config");
    RunConfig cfg;
    cfg.debate.agents = agents_from(root, base_dir, &cfg.calibrator_paths);
    auto& d = cfg.debate;
    if (const auto* t = subtable(root, "debate", "config")) {
        const std::string where = "[debate]";
        reject_unknown(*t,
                       {"rounds", "mode", "confidence", "granularity", "selection", "calibration",
                        "calibrators_dir", "seed", "sv_parse_retries", "workers", "failure_budget"},
                       where);
        try {
            read(*t, "rounds", d.rounds, where);
            std::string s;
            if (t->contains("mode")) {
                read(*t, "mode", s, where);
                d.mode = engine::debate_mode_from_string(s);
            }
            if (t->contains("confidence")) {
                read(*t, "confidence", s, where);
                d.confidence_mode.method = confidence::method_from_string(s);
            }
            if (t->contains("granularity")) {
                read(*t, "granularity", s, where);
                d.confidence_mode.granularity = confidence::granularity_from_string(s);
            }
            if (t->contains("selection")) {
                read(*t, "selection", s, where);
                d.selection_policy = core::selection_policy_from_string(s);
            }
            if (t->contains("calibration")) {
                read(*t, "calibration", s, where);
                d.calibration_method = calibration::method_from_string(s);
            }
            if (t->contains("calibrators_dir")) {
                read(*t, "calibrators_dir", s, where);
                cfg.calibrators_dir = resolve(base_dir, s);
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Config) throw;
            config_error(where, e.what());
        }
        std::int64_t seed = 0;
        read(*t, "seed", seed, where);
        if (seed < 0) config_error(where, "seed must be >= 0");
        d.global_seed = static_cast<std::uint64_t>(seed);
        read(*t, "sv_parse_retries", d.sv_parse_retries, where);
        read(*t, "workers", cfg.workers, where);
        read(*t, "failure_budget", cfg.failure_budget, where);
    }
    if (cfg.workers < 1) throw Error(ErrorCode::Config, "workers must be >= 1");
    if (!(cfg.failure_budget >= 0.0 && cfg.failure_budget <= 1.0)) {
        throw Error(ErrorCode::Config, "failure_budget must lie in [0,1]");
    }
    for (const auto& [id, p] : cfg.calibrator_paths) {
        (void)p;
        if (d.find_agent(id) == nullptr) throw Error(ErrorCode::Config, "calibrator for unknown agent '" + id + "'");
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path) {
    return parse_run_config(read_text(path), path.parent_path());
}

void load_calibrators(RunConfig& cfg, std::vector<std::string>* warnings) {
    auto& d = cfg.debate;
    d.calibrators.clear();
    if (d.calibration_method == calibration::Method::vanilla || d.confidence_mode.method == confidence::Method::None) {
        return;
    }
    for (const auto& a : d.agents) {
        const auto it = cfg.calibrator_paths.find(a.agent_id);
        const fs::path path = it != cfg.calibrator_paths.end() ? it->second : cfg.calibrators_dir / (a.agent_id + ".cal.json");
        if (!fs::exists(path)) {
            throw Error(ErrorCode::Config, "agent '" + a.agent_id + "': calibrator file " + path.string() + " not found");
        }
        try {
            d.calibrators.emplace(a.agent_id, calibration::load_calibrator(path, d.confidence_mode, warnings));
        } catch (const Error& e) {
            throw Error(ErrorCode::Config, "agent '" + a.agent_id + "': " + e.what());
        }
    }
    d.validate();
}

std::string config_digest(const RunConfig& cfg) {
    const auto& d = cfg.debate;
    ordered_json doc;
    ordered_json agents = ordered_json::array();
    for (const auto& a : d.agents) agents.push_back(agent_json(a));
    doc["agents"] = std::move(agents);
    doc["rounds"] = d.rounds;
    doc["mode"] = engine::to_string(d.mode);
    doc["confidence"] = confidence::to_string(d.confidence_mode.method);
    doc["granularity"] = confidence::to_string(d.confidence_mode.granularity);
    doc["calibration"] = calibration::to_string(d.calibration_method);
    doc["selection"] = core::to_string(d.selection_policy);
    doc["seed"] = d.global_seed;
    doc["sv_parse_retries"] = d.sv_parse_retries;
    ordered_json cals = ordered_json::object();
    for (const auto& [id, cal] : d.calibrators) {
        auto j = ordered_json::parse(calibration::calibrator_to_json(cal));
        j.erase("provenance");
        cals[id] = std::move(j);
    }
    doc["calibrators"] = std::move(cals);
    return sha256_hex(doc.dump());
}

std::string transcript_file_name(std::string_view question_id) {
    std::string name;
    bool changed = question_id.empty();
    for (const char c : question_id) {
        const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        name.push_back(safe ? c : '_');
        changed = changed || !safe;
    }
    if (name.starts_with('.')) {
        name[0] = '_';
        changed = true;
    }
    if (changed) {
        char buf[20];
        std::snprintf(buf, sizeof(buf), "-%016llx", static_cast<unsigned long long>(core::fnv1a64(question_id)));
        name += buf;
    }
    return name + ".json";
}

}  // namespace confdebate::harness
