#pragma once

#include <httplib.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "confdebate/calibration/calibration.hpp"
#include "confdebate/core/types.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::string golden(const std::string& name) { return read_file(fs::path(GOLDEN_DIR) / name); }

// Plain find/replace, independent of the engine's own substitution.
inline std::string fill(std::string text, const std::string& key, const std::string& value) {
    const std::string needle = "{" + key + "}";
    for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + value.size())) {
        text.replace(pos, needle.size(), value);
    }
    return text;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("confdebate-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

// IRLS for logistic regression on (s, 1) with the same L2
// term as the library: solves (X'WX + lam I) theta = X'W z each step.
inline std::pair<double, double> irls_logistic(const std::vector<confdebate::calibration::LabeledScore>& data,
                                               double lam = 1e-6) {
    double a = 0.0;
    double b = 0.0;
    for (int it = 0; it < 500; ++it) {
        double saa = lam, sab = 0.0, sbb = lam, ra = 0.0, rb = 0.0;
        for (const auto& d : data) {
            const double eta = a * d.score + b;
            const double p = 1.0 / (1.0 + std::exp(-eta));
            const double w = std::max(p * (1.0 - p), 1e-12);
            const double z = eta + ((d.correct ? 1.0 : 0.0) - p) / w;
            saa += w * d.score * d.score;
            sab += w * d.score;
            sbb += w;
            ra += w * d.score * z;
            rb += w * z;
        }
        const double det = saa * sbb - sab * sab;
        const double na = (sbb * ra - sab * rb) / det;
        const double nb = (saa * rb - sab * ra) / det;
        const double change = std::abs(na - a) + std::abs(nb - b);
        a = na;
        b = nb;
        if (change < 1e-13) break;
    }
    return {a, b};
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Synthetic labelled scores: s ~ U(0,1), label ~ Bernoulli(sigmoid(a s + b)).
inline std::vector<confdebate::calibration::LabeledScore> synthetic_scores(std::uint64_t seed, std::size_t n, double a,
                                                                           double b) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<confdebate::calibration::LabeledScore> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = u(rng);
        out.push_back({s, u(rng) < sigmoid(a * s + b)});
    }
    return out;
}

// Local chat-completions endpoint. The handler sees every request body and
// returns (status, body).
class MockChatServer {
public:
    using Handler = std::function<std::pair<int, std::string>(const std::string& body)>;

    explicit MockChatServer(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            {
                std::lock_guard lock(mu_);
                bodies_.push_back(req.body);
                auth_.push_back(req.get_header_value("Authorization"));
            }
            auto [status, body] = handler_(req.body);
            res.status = status;
            res.set_content(body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockChatServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }
    MockChatServer(const MockChatServer&) = delete;
    MockChatServer& operator=(const MockChatServer&) = delete;

    [[nodiscard]] std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    [[nodiscard]] std::vector<std::string> bodies() const {
        std::lock_guard lock(mu_);
        return bodies_;
    }
    [[nodiscard]] std::vector<std::string> auth_headers() const {
        std::lock_guard lock(mu_);
        return auth_;
    }

private:
    Handler handler_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    mutable std::mutex mu_;
    std::vector<std::string> bodies_;
    std::vector<std::string> auth_;
};

}  // namespace testsupport
