#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deid/prompt.hpp"
#include "deid/types.hpp"

namespace deid {

class ChatClient;

// Replace each span with `marker`, descending start order so earlier offsets
// stay valid; characters outside the spans are byte-identical to the input.
// Throws OverlappingSpans / SpanOutOfRange.
std::string apply_redaction(std::string_view text, const std::vector<AnnotatedSpan>& spans,
                            std::string_view marker = kDefaultMarker);

struct RulePattern {
    enum class Kind { Regex, Word };
    Kind kind = Kind::Regex;
    std::string source;
};

// Per-category pattern lists applied in a fixed category order (CONTACT,
// DATE, ID, AGE, LOCATION, NAME, PROFESSION): structured patterns run before
// the dictionary-heavy categories so partial overlaps cannot occur.
class RuleSet {
  public:
    // Compiled default rules covering all seven categories.
    static RuleSet builtin();

    // One pattern per line: "<CATEGORY>\t<regex|word>\t<pattern>". Lines
    // starting with '#' and blank lines are skipped. Every regex must
    // compile; failures raise InvalidSpec naming the offending line.
    static RuleSet parse(std::string_view text, std::string_view origin = "<memory>");
    static RuleSet from_file(const std::filesystem::path& path);

    const std::vector<RulePattern>& patterns(PhiCategory category) const;

    // Leftmost-longest non-overlapping matches per category. Returned spans
    // satisfy all AnnotatedSpan invariants (scalar offsets, disjoint).
    std::vector<AnnotatedSpan> find_spans(std::string_view text) const;

    RuleSet(RuleSet&&) noexcept;
    RuleSet& operator=(RuleSet&&) noexcept;
    ~RuleSet();

  private:
    RuleSet();
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// The shipped default pattern file contents.
std::string_view builtin_rules_tsv();

struct RuleRedaction {
    std::string redacted;
    std::vector<AnnotatedSpan> spans;
};

RuleRedaction rule_redact(std::string_view text, const RuleSet& rules,
                          std::string_view marker = kDefaultMarker);

struct TransportMeta {
    std::string model;
    int attempts = 1;
    std::optional<int> prompt_tokens;
    std::optional<int> completion_tokens;
};

struct RedactionResult {
    std::string doc_id;
    std::string redacted_text;
    std::string backend_id;
    std::chrono::microseconds elapsed{0};
    std::optional<TransportMeta> transport;
    std::optional<std::string> error;  // set when the backend failed
    bool transport_failure = false;    // error came from exhausted transport retries
};

// Perfect oracle: redacts exactly the gold spans.
RedactionResult mock_redact(const ClinicalDocument& doc, const std::vector<AnnotatedSpan>& gold,
                            std::string_view marker = kDefaultMarker);

// Negative control: output equals input.
RedactionResult identity_redact(const ClinicalDocument& doc);

// Remote backend: system message = rendered prompt, user message = note
// text; the model reply is stored verbatim, never post-edited. Throws
// EmptyCompletion and propagates client errors.
RedactionResult llm_redact(const ClinicalDocument& doc, const PromptTemplate& prompt,
                           ChatClient& client, const std::string& model);

// Uniform backend surface for the pipeline; implementations never mutate
// their input and report failures through RedactionResult::error.
class RedactionBackend {
  public:
    virtual ~RedactionBackend() = default;
    virtual std::string id() const = 0;
    virtual RedactionResult redact(const ClinicalDocument& doc,
                                   const std::string& rendered_prompt) = 0;
};

class MockBackend final : public RedactionBackend {
  public:
    MockBackend(std::map<std::string, std::vector<AnnotatedSpan>> gold,
                std::string marker = std::string(kDefaultMarker));
    std::string id() const override { return "mock"; }
    RedactionResult redact(const ClinicalDocument& doc, const std::string&) override;

  private:
    std::map<std::string, std::vector<AnnotatedSpan>> gold_;
    std::string marker_;
};

class IdentityBackend final : public RedactionBackend {
  public:
    std::string id() const override { return "identity"; }
    RedactionResult redact(const ClinicalDocument& doc, const std::string&) override;
};

class RuleBackend final : public RedactionBackend {
  public:
    explicit RuleBackend(RuleSet rules, std::string marker = std::string(kDefaultMarker));
    std::string id() const override { return "rule"; }
    RedactionResult redact(const ClinicalDocument& doc, const std::string&) override;

  private:
    RuleSet rules_;
    std::string marker_;
};

class LlmBackend final : public RedactionBackend {
  public:
    LlmBackend(ChatClient& client, std::string model);
    std::string id() const override { return "llm"; }
    RedactionResult redact(const ClinicalDocument& doc,
                           const std::string& rendered_prompt) override;

  private:
    ChatClient& client_;
    std::string model_;
};

}  // namespace deid
