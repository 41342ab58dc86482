#include "deid/eval.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <set>

#include "deid/corpus.hpp"
#include "deid/errors.hpp"
#include "deid/utf8.hpp"

namespace deid {

namespace {

constexpr std::int64_t kNegInf = std::numeric_limits<std::int64_t>::min() / 4;

// Alignment DP. Primary objective: maximize preserved (matched) tokens.
// Secondary: among maximal matchings, maximize removed-token runs that sit
// in an output region containing a marker, so recovered segments land on the
// markers rather than on arbitrary duplicates.
//
// State: (i originals consumed, j output tokens consumed, f = marker seen
// since the last match). Value packs (matches, flanked deletions).
struct MiddleAlignment {
    std::vector<std::pair<std::size_t, std::size_t>> matches;  // middle-local indices
    bool degenerate = false;  // DP skipped; treat everything as unmatched
};

MiddleAlignment align_middle(const std::vector<Token>& orig, std::size_t o_lo, std::size_t o_hi,
                             const std::vector<Token>& out, std::size_t r_lo, std::size_t r_hi) {
    MiddleAlignment result;
    const std::size_t n = o_hi - o_lo;
    const std::size_t m = r_hi - r_lo;
    if (n == 0 || m == 0) return result;

    // 2 flag states per cell, one byte of backpointer per state
    const std::size_t states = (n + 1) * (m + 1) * 2;
    if (states > 200'000'000) {
        result.degenerate = true;
        return result;
    }

    const std::int64_t match_weight = static_cast<std::int64_t>(n) + 2;
    std::vector<std::uint8_t> bp(states, 0);
    std::vector<std::int64_t> row_cur(2 * (m + 1), kNegInf);
    std::vector<std::int64_t> row_next(2 * (m + 1), kNegInf);

    auto bp_index = [&](std::size_t i, std::size_t j, int f) {
        return (i * (m + 1) + j) * 2 + static_cast<std::size_t>(f);
    };
    // backpointer: low 3 bits = move (1 match, 2 delete, 3 marker, 4 insert),
    // bit 3 = flag before the move
    auto encode = [](int move, int prev_f) {
        return static_cast<std::uint8_t>(move | (prev_f << 3));
    };

    row_cur[0] = 0;  // (0,0,f=0)
    for (std::size_t i = 0; i <= n; ++i) {
        for (std::size_t j = 0; j <= m; ++j) {
            for (int f = 0; f < 2; ++f) {
                std::int64_t cur = row_cur[j * 2 + f];
                if (cur == kNegInf) continue;
                const Token* o = i < n ? &orig[o_lo + i] : nullptr;
                const Token* r = j < m ? &out[r_lo + j] : nullptr;
                if (o && r && !r->marker && o->text == r->text) {
                    std::int64_t v = cur + match_weight;
                    std::int64_t& slot = row_next[(j + 1) * 2 + 0];
                    if (v > slot) {
                        slot = v;
                        bp[bp_index(i + 1, j + 1, 0)] = encode(1, f);
                    }
                }
                if (o) {
                    std::int64_t v = cur + (f ? 1 : 0);
                    std::int64_t& slot = row_next[j * 2 + f];
                    if (v > slot) {
                        slot = v;
                        bp[bp_index(i + 1, j, f)] = encode(2, f);
                    }
                }
                if (r) {
                    int nf = r->marker ? 1 : f;
                    std::int64_t& slot = row_cur[(j + 1) * 2 + nf];
                    if (cur > slot) {
                        slot = cur;
                        bp[bp_index(i, j + 1, nf)] = encode(r->marker ? 3 : 4, f);
                    }
                }
            }
        }
        if (i < n) {
            row_cur.swap(row_next);
            std::fill(row_next.begin(), row_next.end(), kNegInf);
        }
    }

    int f = row_cur[m * 2 + 0] >= row_cur[m * 2 + 1] ? 0 : 1;
    std::size_t i = n;
    std::size_t j = m;
    while (i != 0 || j != 0 || f != 0) {
        std::uint8_t code = bp[bp_index(i, j, f)];
        int move = code & 0x7;
        int prev_f = (code >> 3) & 1;
        switch (move) {
            case 1:
                --i;
                --j;
                result.matches.emplace_back(i, j);
                break;
            case 2: --i; break;
            case 3:
            case 4: --j; break;
            default:
                // unreachable state; bail out rather than loop
                i = 0;
                j = 0;
                prev_f = 0;
                break;
        }
        f = prev_f;
    }
    std::reverse(result.matches.begin(), result.matches.end());
    return result;
}

}  // namespace

Alignment align(std::string_view original, std::string_view redacted, std::string_view marker) {
    Alignment a;
    a.original_tokens = tokenize(original);
    a.output_tokens = tokenize(redacted, marker);
    const auto& orig = a.original_tokens;
    const auto& out = a.output_tokens;
    const std::size_t n = orig.size();
    const std::size_t m = out.size();

    // shared prefix/suffix shrink the DP to the changed middle
    std::size_t lo = 0;
    while (lo < n && lo < m && !out[lo].marker && orig[lo].text == out[lo].text) ++lo;
    std::size_t o_hi = n;
    std::size_t r_hi = m;
    while (o_hi > lo && r_hi > lo && !out[r_hi - 1].marker &&
           orig[o_hi - 1].text == out[r_hi - 1].text) {
        --o_hi;
        --r_hi;
    }

    for (std::size_t k = 0; k < lo; ++k) a.preserved.emplace_back(k, k);
    MiddleAlignment middle = align_middle(orig, lo, o_hi, out, lo, r_hi);
    for (const auto& [i, j] : middle.matches) a.preserved.emplace_back(lo + i, lo + j);
    for (std::size_t k = 0; o_hi + k < n; ++k) a.preserved.emplace_back(o_hi + k, r_hi + k);

    // one region per gap between consecutive surviving tokens; a region with
    // markers becomes a replaced segment
    const std::size_t regions = a.preserved.size() + 1;
    for (std::size_t k = 0; k < regions; ++k) {
        std::size_t o_begin = k == 0 ? 0 : a.preserved[k - 1].first + 1;
        std::size_t o_end = k == a.preserved.size() ? n : a.preserved[k].first;
        std::size_t r_begin = k == 0 ? 0 : a.preserved[k - 1].second + 1;
        std::size_t r_end = k == a.preserved.size() ? m : a.preserved[k].second;

        std::size_t markers = 0;
        for (std::size_t j = r_begin; j < r_end; ++j) {
            if (out[j].marker) ++markers;
        }
        if (markers == 0) continue;
        if (o_begin < o_end) {
            a.replaced.push_back(
                ReplacedSegment{orig[o_begin].begin, orig[o_end - 1].end, markers});
        } else {
            std::size_t pos = k == 0 ? 0 : orig[a.preserved[k - 1].first].end;
            a.replaced.push_back(ReplacedSegment{pos, pos, markers});
        }
    }
    return a;
}

ScoreResult score(const Alignment& alignment, const std::vector<AnnotatedSpan>& gold,
                  std::string_view original, MatchMode mode) {
    if (!gold.empty()) {
        ClinicalDocument probe;
        probe.doc_id = "<score>";
        probe.text = std::string(original);
        auto violations = validate_annotations(probe, gold);
        if (!violations.empty()) {
            throw InvalidGold("gold spans invalid: " + violations.front().message);
        }
    }

    // merged union of non-empty segments for the strict containment test
    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (const ReplacedSegment& s : alignment.replaced) {
        if (s.src_start == s.src_end) continue;
        if (!merged.empty() && merged.back().second >= s.src_start) {
            merged.back().second = std::max(merged.back().second, s.src_end);
        } else {
            merged.emplace_back(s.src_start, s.src_end);
        }
    }

    auto overlap = [](std::size_t a_begin, std::size_t a_end, std::size_t b_begin,
                      std::size_t b_end) {
        return std::max(a_begin, b_begin) < std::min(a_end, b_end);
    };

    ScoreResult result;
    for (const AnnotatedSpan& g : gold) {
        bool hit = false;
        if (mode == MatchMode::Strict) {
            for (const auto& [b, e] : merged) {
                if (b <= g.start && g.end <= e) {
                    hit = true;
                    break;
                }
                if (b >= g.end) break;
            }
        } else {
            for (const ReplacedSegment& s : alignment.replaced) {
                if (overlap(s.src_start, s.src_end, g.start, g.end)) {
                    hit = true;
                    break;
                }
            }
        }
        auto& bucket = result.per_category[static_cast<std::size_t>(g.category)];
        if (hit) {
            ++result.overall.tp;
            ++bucket.tp;
        } else {
            ++result.overall.fn;
            ++bucket.fn;
        }
    }

    for (const ReplacedSegment& s : alignment.replaced) {
        bool touches_gold = false;
        for (const AnnotatedSpan& g : gold) {
            if (overlap(s.src_start, s.src_end, g.start, g.end)) {
                touches_gold = true;
                break;
            }
        }
        if (!touches_gold) {
            ++result.overall.fp;
            ++result.none.fp;
        }
    }

    for (const auto& [oi, ri] : alignment.preserved) {
        const Token& token = alignment.original_tokens[oi];
        bool touches_gold = false;
        for (const AnnotatedSpan& g : gold) {
            if (overlap(token.begin, token.end, g.start, g.end)) {
                touches_gold = true;
                break;
            }
        }
        if (!touches_gold) {
            ++result.overall.tn;
            ++result.none.tn;
        }
    }
    return result;
}

double accuracy(const ConfusionCounts& counts) {
    std::uint64_t total = counts.total();
    if (total == 0) throw EmptyCounts("accuracy undefined over all-zero counts");
    return static_cast<double>(counts.tp + counts.tn) / static_cast<double>(total);
}

double entity_removal_rate(const ConfusionCounts& counts) {
    std::uint64_t entities = counts.tp + counts.fn;
    if (entities == 0) return 1.0;
    return static_cast<double>(counts.tp) / static_cast<double>(entities);
}

std::string_view to_string(FailureClass failure) {
    switch (failure) {
        case FailureClass::Ok: return "OK";
        case FailureClass::EntityMiss: return "ENTITY_MISS";
        case FailureClass::PromptEcho: return "PROMPT_ECHO";
        case FailureClass::NoOp: return "NO_OP";
        case FailureClass::Incoherent: return "INCOHERENT";
    }
    return "OK";
}

namespace {

std::set<std::string> lowered_token_set(std::string_view text) {
    std::set<std::string> out;
    for (Token& t : tokenize(text)) {
        std::transform(t.text.begin(), t.text.end(), t.text.begin(), [](unsigned char c) {
            return static_cast<char>(std::tolower(c));
        });
        out.insert(std::move(t.text));
    }
    return out;
}

double set_overlap(const std::set<std::string>& sample, const std::set<std::string>& reference) {
    if (sample.empty()) return 0.0;
    std::size_t hits = 0;
    for (const std::string& t : sample) hits += reference.count(t);
    return static_cast<double>(hits) / static_cast<double>(sample.size());
}

std::string squish_whitespace(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += c;
        }
    }
    return out;
}

// plain LCS length over token texts; markers play no role here
std::size_t lcs_tokens(const std::vector<Token>& a, const std::vector<Token>& b) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    if (n == 0 || m == 0) return 0;
    std::vector<std::size_t> prev(m + 1, 0);
    std::vector<std::size_t> cur(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            cur[j] = a[i - 1].text == b[j - 1].text ? prev[j - 1] + 1
                                                    : std::max(prev[j], cur[j - 1]);
        }
        prev.swap(cur);
    }
    return prev[m];
}

}  // namespace

FailureClass classify_failure(std::string_view original, std::string_view prompt_text,
                              std::string_view output, const ConfusionCounts& counts) {
    std::set<std::string> out_tokens = lowered_token_set(output);
    double prompt_overlap = set_overlap(out_tokens, lowered_token_set(prompt_text));
    double original_overlap = set_overlap(out_tokens, lowered_token_set(original));
    if (prompt_overlap > 0.6 && original_overlap < 0.3) return FailureClass::PromptEcho;

    if (counts.tp + counts.fn > 0 && squish_whitespace(original) == squish_whitespace(output)) {
        return FailureClass::NoOp;
    }

    double orig_len = static_cast<double>(scalar_length(original));
    double out_len = static_cast<double>(scalar_length(output));
    if (orig_len > 0 && (out_len < 0.3 * orig_len || out_len > 3.0 * orig_len)) {
        std::vector<Token> a = tokenize(original);
        std::vector<Token> b = tokenize(output);
        double preserved = a.empty() ? 1.0
                                     : static_cast<double>(lcs_tokens(a, b)) /
                                           static_cast<double>(a.size());
        if (preserved < 0.3) return FailureClass::Incoherent;
    }

    if (counts.fn > 0) return FailureClass::EntityMiss;
    return FailureClass::Ok;
}

double EvalReport::overall_accuracy() const {
    return totals.overall.total() == 0 ? 0.0 : accuracy(totals.overall);
}

double EvalReport::overall_removal_rate() const { return entity_removal_rate(totals.overall); }

EvalReport evaluate_documents(const std::vector<AnnotatedDocument>& docs,
                              const std::map<std::string, std::string>& outputs,
                              std::string_view marker, std::string backend_id,
                              std::string prompt_variant, std::string_view prompt_text,
                              MatchMode mode) {
    EvalReport report;
    report.backend_id = std::move(backend_id);
    report.prompt_variant = std::move(prompt_variant);

    std::vector<const AnnotatedDocument*> order;
    for (const AnnotatedDocument& d : docs) order.push_back(&d);
    std::sort(order.begin(), order.end(), [](const AnnotatedDocument* a,
                                             const AnnotatedDocument* b) {
        return a->doc.doc_id < b->doc.doc_id;
    });

    for (const AnnotatedDocument* d : order) {
        auto it = outputs.find(d->doc.doc_id);
        if (it == outputs.end()) continue;
        Alignment alignment = align(d->doc.text, it->second, marker);
        ScoreResult scored = score(alignment, d->spans, d->doc.text, mode);
        DocEval doc_eval;
        doc_eval.doc_id = d->doc.doc_id;
        doc_eval.counts = scored.overall;
        doc_eval.failure = classify_failure(d->doc.text, prompt_text, it->second, scored.overall);

        report.totals.overall += scored.overall;
        report.totals.none += scored.none;
        for (std::size_t c = 0; c < kCategoryCount; ++c) {
            report.totals.per_category[c] += scored.per_category[c];
        }
        ++report.failures[doc_eval.failure];
        report.per_doc.push_back(std::move(doc_eval));
        ++report.docs;
    }
    return report;
}

}  // namespace deid
