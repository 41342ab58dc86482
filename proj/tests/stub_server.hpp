#pragma once

#include <atomic>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace deid::testing {

// Local OpenAI-compatible stub. Each request pops the next scripted step;
// when the script is exhausted the last step repeats.
class StubServer {
  public:
    struct Step {
        int status = 200;
        std::string content = "ok";    // completion text for 200s
        std::string raw_body;          // overrides the canned completion when set
    };

    explicit StubServer(std::vector<Step> script) : script_(std::move(script)) {
        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         handle(req, res);
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this]() { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

    int requests_seen() const { return hits_.load(); }

    std::vector<std::string> received_bodies() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return bodies_;
    }

    std::vector<std::string> received_auth_headers() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return auth_headers_;
    }

  private:
    void handle(const httplib::Request& req, httplib::Response& res) {
        std::size_t index = static_cast<std::size_t>(hits_.fetch_add(1));
        {
            std::lock_guard<std::mutex> lock(mutex_);
            bodies_.push_back(req.body);
            auth_headers_.push_back(req.get_header_value("Authorization"));
        }
        static const Step default_step;
        const Step& step = script_.empty()
                               ? default_step
                               : script_[std::min(index, script_.size() - 1)];
        res.status = step.status;
        if (!step.raw_body.empty()) {
            res.set_content(step.raw_body, "application/json");
            return;
        }
        if (step.status == 200) {
            nlohmann::json body = {
                {"choices",
                 {{{"message", {{"role", "assistant"}, {"content", step.content}}},
                   {"finish_reason", "stop"}}}},
                {"usage", {{"prompt_tokens", 42}, {"completion_tokens", 7}}},
            };
            res.set_content(body.dump(), "application/json");
        } else {
            res.set_content("{\"error\":\"scripted failure\"}", "application/json");
        }
    }

    std::vector<Step> script_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<int> hits_{0};
    mutable std::mutex mutex_;
    std::vector<std::string> bodies_;
    std::vector<std::string> auth_headers_;
};

}  // namespace deid::testing
