#include <doctest.h>

#include <filesystem>

#include "deid/errors.hpp"
#include "deid/hipaa.hpp"
#include "deid/llm_client.hpp"
#include "deid/prompt.hpp"
#include "deid/redact.hpp"
#include "helpers.hpp"
#include "stub_server.hpp"

using namespace deid;
using deid::testing::StubServer;

namespace {

const char* kNote = "Patient Joshua Howard arrived on 04/12/2003.";

ChatClient::Options stub_options(const StubServer& stub,
                                 std::vector<std::string>* log_lines = nullptr,
                                 int max_attempts = 3) {
    ChatClient::Options options;
    options.endpoint = stub.endpoint();
    options.api_key = "sk-test-secret-key-123";
    options.retry.max_attempts = max_attempts;
    options.retry.base_backoff = std::chrono::milliseconds(1);
    options.timeout = std::chrono::milliseconds(2000);
    if (log_lines) {
        options.log = [log_lines](std::string line) { log_lines->push_back(std::move(line)); };
    }
    return options;
}

}  // namespace

TEST_CASE("build_request follows the system/user role protocol") {
    ChatRequest request = build_request(build_implicit_prompt(), kNote, "stub-model");
    REQUIRE(request.messages.size() == 2);
    CHECK(request.messages[0].role == ChatRole::System);
    CHECK(request.messages[0].content == "Please anonymize the following clinical note.");
    CHECK(request.messages[1].role == ChatRole::User);
    CHECK(request.messages[1].content == kNote);
    CHECK(request.temperature == doctest::Approx(0.0));

    PromptTemplate empty;
    CHECK_THROWS_AS(build_request(empty, kNote, "m"), EmptyPrompt);
    CHECK_THROWS_AS(build_request(build_implicit_prompt(), "", "m"), EmptyNote);
}

TEST_CASE("request serialization is byte-deterministic with fixed key order") {
    ChatRequest request = build_request(build_implicit_prompt(), kNote, "stub-model");
    std::string first = serialize_request(request);
    std::string second = serialize_request(request);
    CHECK(first == second);
    CHECK(first.rfind("{\"model\":\"stub-model\",\"messages\":[", 0) == 0);
    CHECK(first.find("\"temperature\":0.0") != std::string::npos);
    CHECK(first.find("max_tokens") == std::string::npos);

    request.max_tokens = 128;
    std::string with_cap = serialize_request(request);
    CHECK(with_cap.find("\"max_tokens\":128") != std::string::npos);
}

TEST_CASE("serialized bodies match the golden fixtures byte for byte") {
    std::filesystem::path golden_dir = std::filesystem::path(DEID_SOURCE_DIR) / "tests" / "golden";
    {
        ChatRequest request = build_request(build_implicit_prompt(), kNote, "stub-model");
        std::string expected = deid::testing::slurp(golden_dir / "chat_request_implicit.json");
        CHECK(serialize_request(request) + "\n" == expected);
    }
    {
        PromptTemplate prompt = build_explicit_prompt_for_categories(kConcreteCategories);
        ChatRequest request = build_request(prompt, kNote, "stub-model");
        request.max_tokens = 512;
        std::string expected = deid::testing::slurp(golden_dir / "chat_request_explicit.json");
        CHECK(serialize_request(request) + "\n" == expected);
    }
}

TEST_CASE("send_chat returns the first choice with usage") {
    StubServer stub({{200, "the redacted note"}});
    ChatClient client(stub_options(stub));
    ChatResponse response = client.send_chat(build_request(build_implicit_prompt(), kNote, "m"));
    CHECK(response.content == "the redacted note");
    CHECK(response.finish_reason == "stop");
    CHECK(response.attempts == 1);
    REQUIRE(response.usage.has_value());
    CHECK(response.usage->prompt_tokens == 42);
    CHECK(response.usage->completion_tokens == 7);

    auto bodies = stub.received_bodies();
    REQUIRE(bodies.size() == 1);
    CHECK(bodies[0] == serialize_request(build_request(build_implicit_prompt(), kNote, "m")));
    auto auth = stub.received_auth_headers();
    CHECK(auth[0] == "Bearer sk-test-secret-key-123");
}

TEST_CASE("429 then 200 succeeds with attempts recorded") {
    StubServer stub({{429}, {200, "fine"}});
    std::vector<std::string> log;
    ChatClient client(stub_options(stub, &log));
    ChatResponse response = client.send_chat(build_request(build_implicit_prompt(), kNote, "m"));
    CHECK(response.content == "fine");
    CHECK(response.attempts == 2);
    CHECK(stub.requests_seen() == 2);

    // the api key must never reach the log
    for (const std::string& line : log) {
        CHECK(line.find("sk-test-secret-key-123") == std::string::npos);
    }
    CHECK_FALSE(log.empty());
}

TEST_CASE("401 fails immediately with AuthError and no retry") {
    StubServer stub({StubServer::Step{401}});
    ChatClient client(stub_options(stub));
    CHECK_THROWS_AS(client.send_chat(build_request(build_implicit_prompt(), kNote, "m")),
                    AuthError);
    CHECK(stub.requests_seen() == 1);
}

TEST_CASE("terminal statuses and garbage bodies raise ProtocolError") {
    {
        StubServer stub({StubServer::Step{400}});
        ChatClient client(stub_options(stub));
        CHECK_THROWS_AS(client.send_chat(build_request(build_implicit_prompt(), kNote, "m")),
                        ProtocolError);
    }
    {
        StubServer stub({{200, "", "this is not json"}});
        ChatClient client(stub_options(stub));
        CHECK_THROWS_AS(client.send_chat(build_request(build_implicit_prompt(), kNote, "m")),
                        ProtocolError);
    }
    {
        StubServer stub({{200, "", "{\"choices\":[]}"}});
        ChatClient client(stub_options(stub));
        CHECK_THROWS_AS(client.send_chat(build_request(build_implicit_prompt(), kNote, "m")),
                        ProtocolError);
    }
}

TEST_CASE("exhausted retries raise TransportError carrying the attempt count") {
    StubServer stub({StubServer::Step{503}});
    std::vector<std::string> log;
    ChatClient client(stub_options(stub, &log, 3));
    try {
        client.send_chat(build_request(build_implicit_prompt(), kNote, "m"));
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.attempts == 3);
    }
    CHECK(stub.requests_seen() == 3);
    for (const std::string& line : log) {
        CHECK(line.find("sk-test-secret-key-123") == std::string::npos);
    }
}

TEST_CASE("a dead endpoint exhausts retries as a transport error") {
    ChatClient::Options options;
    options.endpoint = "http://127.0.0.1:9";  // discard port, nothing listens
    options.api_key = "k";
    options.retry.max_attempts = 2;
    options.retry.base_backoff = std::chrono::milliseconds(1);
    options.timeout = std::chrono::milliseconds(200);
    ChatClient client(std::move(options));
    CHECK_THROWS_AS(client.send_chat(build_request(build_implicit_prompt(), kNote, "m")),
                    TransportError);
}

TEST_CASE("backoff delays grow monotonically before jitter and stay bounded") {
    RetryPolicy policy;
    policy.base_backoff = std::chrono::milliseconds(100);
    auto previous = backoff_delay(policy, 1, 0.0);
    for (int attempt = 2; attempt <= 8; ++attempt) {
        auto delay = backoff_delay(policy, attempt, 0.0);
        CHECK(delay >= previous);
        previous = delay;
    }
    CHECK(backoff_delay(policy, 1, 0.0).count() == 100);
    CHECK(backoff_delay(policy, 2, 0.0).count() == 200);
    auto with_jitter = backoff_delay(policy, 1, 0.999);
    CHECK(with_jitter.count() >= 100);
    CHECK(with_jitter.count() <= 150);
}

TEST_CASE("llm_redact stores the completion verbatim with transport metadata") {
    std::string baked = "Patient [redacted] arrived on [redacted].\n";
    StubServer stub({{200, baked}});
    ChatClient client(stub_options(stub));
    ClinicalDocument doc{"d1", kNote, std::nullopt, CorpusSource::Synthetic};
    RedactionResult result = llm_redact(doc, build_implicit_prompt(), client, "stub-model");
    CHECK(result.redacted_text == baked);  // byte-exact, no post-editing
    REQUIRE(result.transport.has_value());
    CHECK(result.transport->model == "stub-model");
    CHECK(result.transport->attempts == 1);
    CHECK(result.transport->prompt_tokens == 42);
}

TEST_CASE("llm_redact surfaces empty completions and counts retries") {
    {
        StubServer stub({{200, ""}});
        ChatClient client(stub_options(stub));
        ClinicalDocument doc{"d1", kNote, std::nullopt, CorpusSource::Synthetic};
        CHECK_THROWS_AS(llm_redact(doc, build_implicit_prompt(), client, "m"), EmptyCompletion);
    }
    {
        StubServer stub({{503}, {503}, {200, "ok done"}});
        ChatClient client(stub_options(stub));
        ClinicalDocument doc{"d1", kNote, std::nullopt, CorpusSource::Synthetic};
        RedactionResult result = llm_redact(doc, build_implicit_prompt(), client, "m");
        REQUIRE(result.transport.has_value());
        CHECK(result.transport->attempts == 3);  // two retries
    }
}

TEST_CASE("LlmBackend reports transport exhaustion as an error result") {
    ChatClient::Options options;
    options.endpoint = "http://127.0.0.1:9";
    options.api_key = "k";
    options.retry.max_attempts = 2;
    options.retry.base_backoff = std::chrono::milliseconds(1);
    options.timeout = std::chrono::milliseconds(200);
    ChatClient client(std::move(options));
    LlmBackend backend(client, "m");
    ClinicalDocument doc{"d1", kNote, std::nullopt, CorpusSource::Synthetic};
    RedactionResult result = backend.redact(doc, "prompt");
    REQUIRE(result.error.has_value());
    CHECK(result.transport_failure);
    CHECK(result.redacted_text.empty());
}

TEST_CASE("llm similarity scorer normalizes, retries and clamps") {
    SUBCASE("numeric reply maps to [0,1]") {
        StubServer stub({{200, "87"}});
        ChatClient client(stub_options(stub));
        auto scorer = llm_similarity_scorer(client, "m");
        CHECK(scorer("Names", "names and initials") == doctest::Approx(0.87));
        CHECK(stub.requests_seen() == 1);
    }
    SUBCASE("non-numeric replies retried once, then scored 0 with a warning") {
        StubServer stub({{200, "not sure"}, {200, "still not sure"}});
        ChatClient client(stub_options(stub));
        std::vector<std::string> warnings;
        auto scorer = llm_similarity_scorer(client, "m", [&warnings](std::string w) {
            warnings.push_back(std::move(w));
        });
        CHECK(scorer("a", "b") == doctest::Approx(0.0));
        CHECK(stub.requests_seen() == 2);
        CHECK(warnings.size() == 1);
    }
    SUBCASE("values above 100 clamp to 1.0") {
        StubServer stub({{200, "150"}});
        ChatClient client(stub_options(stub));
        auto scorer = llm_similarity_scorer(client, "m");
        CHECK(scorer("a", "b") == doctest::Approx(1.0));
    }
}
