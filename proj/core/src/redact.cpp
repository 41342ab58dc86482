#include "deid/redact.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <regex>
#include <sstream>

#include "deid/errors.hpp"
#include "deid/llm_client.hpp"
#include "deid/utf8.hpp"

namespace deid {

std::string apply_redaction(std::string_view text, const std::vector<AnnotatedSpan>& spans,
                            std::string_view marker) {
    Utf8Index index(text);
    const std::size_t n = index.scalars();

    std::vector<const AnnotatedSpan*> order;
    order.reserve(spans.size());
    for (const AnnotatedSpan& s : spans) order.push_back(&s);
    std::sort(order.begin(), order.end(),
              [](const AnnotatedSpan* a, const AnnotatedSpan* b) { return a->start < b->start; });

    for (std::size_t i = 0; i < order.size(); ++i) {
        const AnnotatedSpan& s = *order[i];
        if (s.start >= s.end || s.end > n) {
            std::ostringstream os;
            os << "span [" << s.start << "," << s.end << ") invalid for text of " << n
               << " scalars";
            throw SpanOutOfRange(os.str());
        }
        if (i > 0 && order[i - 1]->end > s.start) {
            std::ostringstream os;
            os << "span [" << s.start << "," << s.end << ") overlaps [" << order[i - 1]->start
               << "," << order[i - 1]->end << ")";
            throw OverlappingSpans(os.str());
        }
    }

    std::string out(text);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        std::size_t byte_start = index.byte_of((*it)->start);
        std::size_t byte_end = index.byte_of((*it)->end);
        out.replace(byte_start, byte_end - byte_start, marker);
    }
    return out;
}

// ---------------------------------------------------------------------------
// RuleSet
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<PhiCategory, 7> kRuleApplicationOrder = {
    PhiCategory::Contact, PhiCategory::Date, PhiCategory::Id,        PhiCategory::Age,
    PhiCategory::Location, PhiCategory::Name, PhiCategory::Profession,
};

inline bool is_word_byte(unsigned char c) {
    return std::isalnum(c) || c >= 0x80;
}

struct ByteSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

bool overlaps(const ByteSpan& a, const ByteSpan& b) {
    return a.begin < b.end && b.begin < a.end;
}

}  // namespace

struct RuleSet::Impl {
    struct Compiled {
        RulePattern pattern;
        std::optional<std::regex> regex;  // set for Kind::Regex
    };
    std::array<std::vector<Compiled>, kCategoryCount> by_category;
    std::array<std::vector<RulePattern>, kCategoryCount> sources;
};

RuleSet::RuleSet() : impl_(std::make_unique<Impl>()) {}
RuleSet::RuleSet(RuleSet&&) noexcept = default;
RuleSet& RuleSet::operator=(RuleSet&&) noexcept = default;
RuleSet::~RuleSet() = default;

RuleSet RuleSet::parse(std::string_view text, std::string_view origin) {
    RuleSet out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;

        auto fail = [&](const std::string& what) {
            throw InvalidSpec(std::string(origin) + ":" + std::to_string(line_no) + ": " + what);
        };

        std::size_t tab1 = line.find('\t');
        std::size_t tab2 = tab1 == std::string_view::npos ? std::string_view::npos
                                                          : line.find('\t', tab1 + 1);
        if (tab2 == std::string_view::npos) fail("expected CATEGORY<TAB>kind<TAB>pattern");
        std::string_view category_name = line.substr(0, tab1);
        std::string_view kind_name = line.substr(tab1 + 1, tab2 - tab1 - 1);
        std::string_view pattern = line.substr(tab2 + 1);

        auto category = phi_category_from_string(category_name);
        if (!category || *category == PhiCategory::Others) {
            fail("unknown category '" + std::string(category_name) + "'");
        }
        if (pattern.empty()) fail("empty pattern");

        RulePattern rule;
        rule.source = std::string(pattern);
        Impl::Compiled compiled;
        if (kind_name == "regex") {
            rule.kind = RulePattern::Kind::Regex;
            try {
                compiled.regex.emplace(rule.source,
                                       std::regex::ECMAScript | std::regex::optimize);
            } catch (const std::regex_error& e) {
                fail("regex does not compile: " + std::string(e.what()));
            }
        } else if (kind_name == "word") {
            rule.kind = RulePattern::Kind::Word;
        } else {
            fail("unknown kind '" + std::string(kind_name) + "' (expected regex|word)");
        }
        compiled.pattern = rule;
        std::size_t slot = static_cast<std::size_t>(*category);
        out.impl_->by_category[slot].push_back(std::move(compiled));
        out.impl_->sources[slot].push_back(std::move(rule));
    }

    for (PhiCategory category : kConcreteCategories) {
        if (out.impl_->by_category[static_cast<std::size_t>(category)].empty()) {
            throw InvalidSpec(std::string(origin) + ": no pattern for category " +
                              std::string(to_string(category)));
        }
    }
    return out;
}

RuleSet RuleSet::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open rule file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

RuleSet RuleSet::builtin() { return parse(builtin_rules_tsv(), "<builtin>"); }

const std::vector<RulePattern>& RuleSet::patterns(PhiCategory category) const {
    return impl_->sources[static_cast<std::size_t>(category)];
}

std::vector<AnnotatedSpan> RuleSet::find_spans(std::string_view text) const {
    Utf8Index index(text);
    std::vector<ByteSpan> claimed;
    std::vector<std::pair<ByteSpan, PhiCategory>> accepted;

    for (PhiCategory category : kRuleApplicationOrder) {
        std::vector<ByteSpan> candidates;
        for (const Impl::Compiled& compiled :
             impl_->by_category[static_cast<std::size_t>(category)]) {
            if (compiled.regex) {
                std::cregex_iterator it(text.data(), text.data() + text.size(), *compiled.regex);
                std::cregex_iterator end;
                for (; it != end; ++it) {
                    std::size_t begin = static_cast<std::size_t>(it->position(0));
                    candidates.push_back(ByteSpan{begin, begin + it->length(0)});
                }
            } else {
                const std::string& word = compiled.pattern.source;
                std::size_t at = 0;
                while ((at = text.find(word, at)) != std::string_view::npos) {
                    bool left_ok =
                        at == 0 || !is_word_byte(static_cast<unsigned char>(text[at - 1]));
                    std::size_t after = at + word.size();
                    bool right_ok = after >= text.size() ||
                                    !is_word_byte(static_cast<unsigned char>(text[after]));
                    if (left_ok && right_ok) candidates.push_back(ByteSpan{at, after});
                    at += 1;
                }
            }
        }
        // leftmost-longest within the category, never crossing a claim made
        // by an earlier category
        std::sort(candidates.begin(), candidates.end(), [](const ByteSpan& a, const ByteSpan& b) {
            if (a.begin != b.begin) return a.begin < b.begin;
            return a.end > b.end;
        });
        for (const ByteSpan& c : candidates) {
            bool free = std::none_of(claimed.begin(), claimed.end(),
                                     [&](const ByteSpan& k) { return overlaps(k, c); });
            if (free) {
                claimed.push_back(c);
                accepted.emplace_back(c, category);
            }
        }
    }

    std::vector<AnnotatedSpan> spans;
    spans.reserve(accepted.size());
    for (const auto& [byte_span, category] : accepted) {
        AnnotatedSpan s;
        s.start = index.scalar_of(byte_span.begin);
        s.end = index.scalar_of(byte_span.end);
        s.category = category;
        s.surface = std::string(text.substr(byte_span.begin, byte_span.end - byte_span.begin));
        spans.push_back(std::move(s));
    }
    std::sort(spans.begin(), spans.end(),
              [](const AnnotatedSpan& a, const AnnotatedSpan& b) { return a.start < b.start; });
    return spans;
}

RuleRedaction rule_redact(std::string_view text, const RuleSet& rules, std::string_view marker) {
    RuleRedaction out;
    out.spans = rules.find_spans(text);
    out.redacted = apply_redaction(text, out.spans, marker);
    return out;
}

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

namespace {

template <typename F>
RedactionResult timed(const ClinicalDocument& doc, std::string backend_id, F&& fill) {
    RedactionResult result;
    result.doc_id = doc.doc_id;
    result.backend_id = std::move(backend_id);
    auto t0 = std::chrono::steady_clock::now();
    fill(result);
    result.elapsed =
        std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0);
    return result;
}

}  // namespace

RedactionResult mock_redact(const ClinicalDocument& doc, const std::vector<AnnotatedSpan>& gold,
                            std::string_view marker) {
    return timed(doc, "mock", [&](RedactionResult& r) {
        r.redacted_text = apply_redaction(doc.text, gold, marker);
    });
}

RedactionResult identity_redact(const ClinicalDocument& doc) {
    return timed(doc, "identity", [&](RedactionResult& r) { r.redacted_text = doc.text; });
}

RedactionResult llm_redact(const ClinicalDocument& doc, const PromptTemplate& prompt,
                           ChatClient& client, const std::string& model) {
    return timed(doc, "llm", [&](RedactionResult& r) {
        ChatRequest request = build_request(prompt, doc.text, model);
        ChatResponse response = client.send_chat(request);
        if (response.content.empty()) {
            throw EmptyCompletion("model returned an empty completion for doc " + doc.doc_id);
        }
        r.redacted_text = response.content;  // stored verbatim, never post-edited
        TransportMeta meta;
        meta.model = model;
        meta.attempts = response.attempts;
        if (response.usage) {
            meta.prompt_tokens = response.usage->prompt_tokens;
            meta.completion_tokens = response.usage->completion_tokens;
        }
        r.transport = meta;
    });
}

MockBackend::MockBackend(std::map<std::string, std::vector<AnnotatedSpan>> gold,
                         std::string marker)
    : gold_(std::move(gold)), marker_(std::move(marker)) {}

RedactionResult MockBackend::redact(const ClinicalDocument& doc, const std::string&) {
    auto it = gold_.find(doc.doc_id);
    if (it == gold_.end()) {
        RedactionResult r = identity_redact(doc);
        r.backend_id = id();
        r.error = "no gold spans for doc " + doc.doc_id;
        return r;
    }
    return mock_redact(doc, it->second, marker_);
}

RedactionResult IdentityBackend::redact(const ClinicalDocument& doc, const std::string&) {
    return identity_redact(doc);
}

RuleBackend::RuleBackend(RuleSet rules, std::string marker)
    : rules_(std::move(rules)), marker_(std::move(marker)) {}

RedactionResult RuleBackend::redact(const ClinicalDocument& doc, const std::string&) {
    return timed(doc, id(), [&](RedactionResult& r) {
        r.redacted_text = rule_redact(doc.text, rules_, marker_).redacted;
    });
}

LlmBackend::LlmBackend(ChatClient& client, std::string model)
    : client_(client), model_(std::move(model)) {}

RedactionResult LlmBackend::redact(const ClinicalDocument& doc,
                                   const std::string& rendered_prompt) {
    return timed(doc, id(), [&](RedactionResult& r) {
        try {
            ChatRequest request;
            request.model = model_;
            request.temperature = 0.0;
            request.messages.push_back({ChatRole::System, rendered_prompt});
            request.messages.push_back({ChatRole::User, doc.text});
            ChatResponse response = client_.send_chat(request);
            if (response.content.empty()) {
                throw EmptyCompletion("model returned an empty completion for doc " +
                                      doc.doc_id);
            }
            r.redacted_text = response.content;
            TransportMeta meta;
            meta.model = model_;
            meta.attempts = response.attempts;
            if (response.usage) {
                meta.prompt_tokens = response.usage->prompt_tokens;
                meta.completion_tokens = response.usage->completion_tokens;
            }
            r.transport = meta;
        } catch (const TransportError& e) {
            r.error = e.what();
            r.transport_failure = true;
        } catch (const AuthError& e) {
            r.error = e.what();
            r.transport_failure = true;
        } catch (const std::exception& e) {
            r.error = e.what();
        }
    });
}

}  // namespace deid
