#include "deid/llm_client.hpp"

#include <random>
#include <semaphore>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "deid/errors.hpp"
#include "deid/prompt.hpp"

namespace deid {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(ChatRole role) {
    switch (role) {
        case ChatRole::System: return "system";
        case ChatRole::User: return "user";
        case ChatRole::Assistant: return "assistant";
    }
    return "user";
}

bool is_retryable_status(int status) {
    return status == 429 || status == 500 || status == 502 || status == 503 || status == 504;
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt,
                                        double jitter_unit) {
    if (attempt < 1) attempt = 1;
    auto base = policy.base_backoff.count();
    long long scaled = base << std::min(attempt - 1, 16);
    double jittered = static_cast<double>(scaled) * (1.0 + 0.5 * jitter_unit);
    return std::chrono::milliseconds(static_cast<long long>(jittered));
}

std::string serialize_request(const ChatRequest& request) {
    ordered_json body;
    body["model"] = request.model;
    ordered_json messages = ordered_json::array();
    for (const ChatMessage& m : request.messages) {
        ordered_json msg;
        msg["role"] = to_string(m.role);
        msg["content"] = m.content;
        messages.push_back(std::move(msg));
    }
    body["messages"] = std::move(messages);
    body["temperature"] = request.temperature;
    if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
    return body.dump();
}

ChatRequest build_request(const PromptTemplate& prompt, std::string_view note_text,
                          std::string model, double temperature) {
    std::string rendered = render(prompt);
    if (rendered.empty()) throw EmptyPrompt("rendered prompt template is empty");
    if (note_text.empty()) throw EmptyNote("clinical note text is empty");
    ChatRequest request;
    request.model = std::move(model);
    request.temperature = temperature;
    request.messages.push_back({ChatRole::System, std::move(rendered)});
    request.messages.push_back({ChatRole::User, std::string(note_text)});
    return request;
}

namespace {

struct ParsedEndpoint {
    std::string base;         // scheme://host[:port]
    std::string path_prefix;  // optional, no trailing slash
};

ParsedEndpoint split_endpoint(const std::string& endpoint) {
    ParsedEndpoint out;
    std::size_t scheme = endpoint.find("://");
    std::size_t path = scheme == std::string::npos ? endpoint.find('/')
                                                   : endpoint.find('/', scheme + 3);
    if (path == std::string::npos) {
        out.base = endpoint;
    } else {
        out.base = endpoint.substr(0, path);
        out.path_prefix = endpoint.substr(path);
        while (!out.path_prefix.empty() && out.path_prefix.back() == '/') {
            out.path_prefix.pop_back();
        }
    }
    return out;
}

ChatResponse parse_response_body(const std::string& body, int attempts) {
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("unparseable completion body: ") + e.what());
    }
    if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
        parsed["choices"].empty()) {
        throw ProtocolError("completion body has no choices");
    }
    const auto& choice = parsed["choices"][0];
    ChatResponse response;
    response.attempts = attempts;
    if (choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
        response.content = choice["message"]["content"].get<std::string>();
    }
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
        response.finish_reason = choice["finish_reason"].get<std::string>();
    }
    if (parsed.contains("usage") && parsed["usage"].is_object()) {
        ChatUsage usage;
        usage.prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
        usage.completion_tokens = parsed["usage"].value("completion_tokens", 0);
        response.usage = usage;
    }
    return response;
}

double jitter_unit() {
    thread_local std::mt19937_64 gen{std::random_device{}()};
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace

struct ChatClient::Impl {
    explicit Impl(int max_in_flight)
        : gate(std::max(1, max_in_flight)) {}
    std::counting_semaphore<1024> gate;
};

ChatClient::ChatClient(Options options)
    : options_(std::move(options)), impl_(std::make_unique<Impl>(options_.max_in_flight)) {}

ChatClient::~ChatClient() = default;

ChatResponse ChatClient::send_chat(const ChatRequest& request) {
    const ParsedEndpoint endpoint = split_endpoint(options_.endpoint);
    const std::string path = endpoint.path_prefix + "/v1/chat/completions";
    const std::string body = serialize_request(request);

    auto log = [&](const std::string& line) {
        if (options_.log) options_.log(line);
    };

    const int max_attempts = std::max(1, options_.retry.max_attempts);
    std::string last_failure = "no attempt made";
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        httplib::Result result;
        {
            impl_->gate.acquire();
            struct Release {
                std::counting_semaphore<1024>& gate;
                ~Release() { gate.release(); }
            } release{impl_->gate};

            httplib::Client client(endpoint.base);
            auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
            if (secs.count() < 1) secs = std::chrono::seconds(1);
            client.set_connection_timeout(secs.count(), 0);
            client.set_read_timeout(secs.count(), 0);
            client.set_write_timeout(secs.count(), 0);
            httplib::Headers headers = {
                {"Authorization", "Bearer " + options_.api_key},
            };
            result = client.Post(path, headers, body, "application/json");
        }

        if (result) {
            int status = result->status;
            if (status == 200) {
                log("POST " + path + " attempt " + std::to_string(attempt) + "/" +
                    std::to_string(max_attempts) + " -> 200");
                return parse_response_body(result->body, attempt);
            }
            if (status == 401 || status == 403) {
                // never retried
                throw AuthError("authentication rejected with status " +
                                std::to_string(status));
            }
            if (!is_retryable_status(status)) {
                throw ProtocolError("endpoint rejected request with status " +
                                    std::to_string(status));
            }
            last_failure = "status " + std::to_string(status);
        } else {
            last_failure = "transport error (" + httplib::to_string(result.error()) + ")";
        }

        if (attempt < max_attempts) {
            auto delay = backoff_delay(options_.retry, attempt, jitter_unit());
            log("POST " + path + " attempt " + std::to_string(attempt) + "/" +
                std::to_string(max_attempts) + " -> " + last_failure + ", retrying in " +
                std::to_string(delay.count()) + "ms");
            std::this_thread::sleep_for(delay);
        } else {
            log("POST " + path + " attempt " + std::to_string(attempt) + "/" +
                std::to_string(max_attempts) + " -> " + last_failure + ", giving up");
        }
    }
    throw TransportError("chat request failed after " + std::to_string(max_attempts) +
                             " attempts: " + last_failure,
                         max_attempts);
}

ChatResponse send_chat(const std::string& endpoint, const std::string& api_key,
                       const ChatRequest& request, const RetryPolicy& policy) {
    ChatClient::Options options;
    options.endpoint = endpoint;
    options.api_key = api_key;
    options.retry = policy;
    ChatClient client(std::move(options));
    return client.send_chat(request);
}

}  // namespace deid
