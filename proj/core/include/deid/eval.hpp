#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "deid/tokenize.hpp"
#include "deid/types.hpp"

namespace deid {

// One maximal original-text range that was substituted by marker tokens.
// src_start == src_end marks a spurious marker with no source material.
struct ReplacedSegment {
    std::size_t src_start = 0;  // scalar offsets into the original
    std::size_t src_end = 0;
    std::size_t marker_count = 1;
};

// Diff-derived correspondence between an original note and a redacted
// rendering of it. LLM output carries no offsets, so replaced ranges are
// recovered from a token-level alignment anchored at marker tokens.
struct Alignment {
    std::vector<Token> original_tokens;
    std::vector<Token> output_tokens;
    // surviving tokens: (original index, output index), ascending
    std::vector<std::pair<std::size_t, std::size_t>> preserved;
    std::vector<ReplacedSegment> replaced;  // disjoint, sorted

    double preserved_fraction() const {
        return original_tokens.empty()
                   ? 1.0
                   : static_cast<double>(preserved.size()) /
                         static_cast<double>(original_tokens.size());
    }
};

// Token-level alignment of `redacted` against `original`. Accepts the given
// marker anywhere in the output plus its bare form standing alone as a
// token. Whitespace differences alone never create segments. Maximizes the
// number of preserved tokens; among maximal matchings prefers those that
// attach removed tokens to markers.
Alignment align(std::string_view original, std::string_view redacted,
                std::string_view marker = "[redacted]");

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& other) {
        tp += other.tp;
        tn += other.tn;
        fp += other.fp;
        fn += other.fn;
        return *this;
    }
};

// Strict: a gold entity counts TP only when fully inside the union of
// replaced segments; a surviving fragment is still a leak. Lenient: any
// overlap counts.
enum class MatchMode { Strict, Lenient };

// Per-category breakdown. TP/FN are attributed to the gold span's category;
// FP (and token-level TN) land in the synthetic NONE bucket.
struct ScoreResult {
    ConfusionCounts overall;
    std::array<ConfusionCounts, kCategoryCount> per_category{};
    ConfusionCounts none;
};

// Score one aligned document against its gold spans. Throws InvalidGold when
// the gold spans violate their invariants against `original`.
ScoreResult score(const Alignment& alignment, const std::vector<AnnotatedSpan>& gold,
                  std::string_view original, MatchMode mode = MatchMode::Strict);

// Eq.-1 accuracy: (tp+tn)/(tp+tn+fp+fn). Throws EmptyCounts on an all-zero
// denominator.
double accuracy(const ConfusionCounts& counts);

// Share of gold entities removed: tp/(tp+fn); vacuously 1.0 with no gold.
double entity_removal_rate(const ConfusionCounts& counts);

enum class FailureClass {
    Ok = 0,
    EntityMiss,
    PromptEcho,
    NoOp,
    Incoherent,
};

std::string_view to_string(FailureClass failure);

// Order of precedence: PROMPT_ECHO, NO_OP, INCOHERENT, ENTITY_MISS, OK.
FailureClass classify_failure(std::string_view original, std::string_view prompt_text,
                              std::string_view output, const ConfusionCounts& counts);

struct DocEval {
    std::string doc_id;
    ConfusionCounts counts;
    FailureClass failure = FailureClass::Ok;
};

struct EvalReport {
    std::string backend_id;
    std::string prompt_variant;
    std::size_t docs = 0;
    ScoreResult totals;  // micro-averaged (pooled) counts
    std::map<FailureClass, std::size_t> failures;
    std::vector<DocEval> per_doc;

    double overall_accuracy() const;
    double overall_removal_rate() const;
};

// Align + score + classify every document of one backend run. `outputs` maps
// doc_id to the backend's raw output; documents without an output are
// skipped. Deterministic: documents are processed in doc_id order.
EvalReport evaluate_documents(const std::vector<AnnotatedDocument>& docs,
                              const std::map<std::string, std::string>& outputs,
                              std::string_view marker, std::string backend_id,
                              std::string prompt_variant, std::string_view prompt_text,
                              MatchMode mode = MatchMode::Strict);

// Table-2-style results table plus CSV and failure-histogram renderings.
struct ResultsTable {
    std::vector<EvalReport> reports;

    std::string to_csv() const;
    std::string to_text() const;        // backends x prompt variants, 3 decimals
    std::string failures_json() const;  // histogram per backend/variant
};

ResultsTable emit_report(std::vector<EvalReport> reports);

}  // namespace deid
