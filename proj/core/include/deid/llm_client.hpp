#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deid {

struct PromptTemplate;

enum class ChatRole { System, User, Assistant };

std::string_view to_string(ChatRole role);

struct ChatMessage {
    ChatRole role = ChatRole::User;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::optional<int> max_tokens;
};

struct ChatUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct ChatResponse {
    std::string content;
    std::string finish_reason;
    std::optional<ChatUsage> usage;
    int attempts = 1;  // total attempts spent on the winning request
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_backoff{250};
};

// Statuses worth retrying: rate limiting and transient server failures.
bool is_retryable_status(int status);

// Pre-jitter delay grows exponentially with the attempt index; jitter_unit
// in [0,1) stretches it by up to 50%. Pure so the schedule is testable.
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt,
                                        double jitter_unit);

// Deterministic JSON body: {"model":...,"messages":[{"role","content"}...],
// "temperature":...} with "max_tokens" appended when set. Key order is
// fixed; identical requests serialize to identical bytes.
std::string serialize_request(const ChatRequest& request);

// Fig-5-style role protocol: system message carries the rendered prompt,
// user message carries the note. Throws EmptyPrompt / EmptyNote.
ChatRequest build_request(const PromptTemplate& prompt, std::string_view note_text,
                          std::string model, double temperature = 0.0);

// Minimal chat-completions client for any OpenAI-compatible endpoint.
class ChatClient {
  public:
    struct Options {
        std::string endpoint;  // e.g. "http://127.0.0.1:8080"
        std::string api_key;
        RetryPolicy retry;
        std::chrono::milliseconds timeout{30000};
        int max_in_flight = 4;
        // Diagnostic sink; never receives the api key.
        std::function<void(std::string)> log;
    };

    explicit ChatClient(Options options);
    ~ChatClient();

    ChatClient(const ChatClient&) = delete;
    ChatClient& operator=(const ChatClient&) = delete;

    // POST <endpoint>/v1/chat/completions. Throws AuthError on 401/403
    // (never retried), TransportError once retries are exhausted, and
    // ProtocolError on unparseable or terminally rejected responses.
    ChatResponse send_chat(const ChatRequest& request);

    const Options& options() const { return options_; }

  private:
    struct Impl;
    Options options_;
    std::unique_ptr<Impl> impl_;
};

ChatResponse send_chat(const std::string& endpoint, const std::string& api_key,
                       const ChatRequest& request, const RetryPolicy& policy);

}  // namespace deid
