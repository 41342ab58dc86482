#include <cstdio>
#include <string>
#include <vector>

#include "deid/corpus.hpp"
#include "deid/errors.hpp"
#include "deid/rng.hpp"
#include "deid/utf8.hpp"
#include "pools.hpp"

namespace deid {

namespace {

// Accumulates note text while tracking scalar offsets, so gold spans are
// correct by construction.
class NoteBuilder {
  public:
    void literal(std::string_view s) {
        text_ += s;
        scalars_ += scalar_length(s);
    }

    void entity(std::string_view surface, PhiCategory category) {
        spans_.push_back(AnnotatedSpan{scalars_, scalars_ + scalar_length(surface), category,
                                       std::string(surface)});
        literal(surface);
    }

    // Emit a one-placeholder sentence; `tpl` contains exactly one "{}".
    void sentence(std::string_view tpl, std::string_view surface, PhiCategory category) {
        std::size_t hole = tpl.find("{}");
        literal(tpl.substr(0, hole));
        entity(surface, category);
        literal(tpl.substr(hole + 2));
    }

    std::string take_text() { return std::move(text_); }
    std::vector<AnnotatedSpan> take_spans() { return std::move(spans_); }

  private:
    std::string text_;
    std::size_t scalars_ = 0;
    std::vector<AnnotatedSpan> spans_;
};

std::string format2(unsigned v) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02u", v);
    return buf;
}

std::string make_date(Rng& rng) {
    unsigned month = static_cast<unsigned>(rng.range(1, 12));
    unsigned day = static_cast<unsigned>(rng.range(1, 28));
    unsigned year = static_cast<unsigned>(rng.range(1990, 2014));
    return format2(month) + "/" + format2(day) + "/" + std::to_string(year);
}

std::string make_phone(Rng& rng) {
    std::string mid = std::to_string(rng.range(200, 999));
    std::string tail = std::to_string(rng.range(1000, 9999));
    if (rng.below(2) == 0) return "555-" + mid + "-" + tail;
    return "(555) " + mid + "-" + tail;
}

std::string make_email(Rng& rng) {
    return std::string(pools::kEmailUsers[rng.below(pools::kEmailUsers.size())]) + "@" +
           std::string(pools::kEmailDomain);
}

std::string make_id(Rng& rng) {
    std::string digits = std::to_string(rng.range(1000000, 9999999));
    if (rng.below(3) == 0) {
        char prefix = static_cast<char>('A' + rng.below(26));
        return std::string(1, prefix) + digits;
    }
    return digits;
}

std::string make_name(Rng& rng) {
    return std::string(pools::kFirstNames[rng.below(pools::kFirstNames.size())]) + " " +
           std::string(pools::kLastNames[rng.below(pools::kLastNames.size())]);
}

std::string make_address(Rng& rng) {
    return std::to_string(rng.range(100, 9999)) + " " +
           std::string(pools::kStreetNames[rng.below(pools::kStreetNames.size())]) + " " +
           std::string(pools::kStreetSuffixes[rng.below(pools::kStreetSuffixes.size())]);
}

std::string make_age(Rng& rng, bool phrase_years) {
    std::string n = std::to_string(rng.range(18, 95));
    return phrase_years ? n + " years old" : "age " + n;
}

constexpr std::array<std::string_view, 8> kFiller = {
    "No acute distress was observed.",
    "Vital signs remained stable throughout the visit.",
    "The care team discussed the plan in detail.",
    "Medication reconciliation was completed.",
    "The patient denies fever, chills, or weight loss.",
    "Breath sounds were clear bilaterally.",
    "A repeat evaluation was recommended.",
    "All questions were answered to satisfaction.",
};

struct EntitySentence {
    std::string tpl;
    std::string surface;
    PhiCategory category;
};

EntitySentence compose(PhiCategory category, std::size_t ordinal, Rng& rng) {
    switch (category) {
        case PhiCategory::Name: {
            constexpr std::array<std::string_view, 4> tpls = {
                "Patient {} was seen in clinic today.",
                "Dr. {} reviewed the imaging results.",
                "The consult note was dictated by Dr. {}.",
                "{} tolerated the procedure well.",
            };
            return {std::string(tpls[ordinal % tpls.size()]), make_name(rng), category};
        }
        case PhiCategory::Profession: {
            constexpr std::array<std::string_view, 3> tpls = {
                "The patient works as a {}.",
                "Occupation listed as {} on intake.",
                "Previously employed as a {}.",
            };
            return {std::string(tpls[ordinal % tpls.size()]),
                    std::string(pools::kProfessions[rng.below(pools::kProfessions.size())]),
                    category};
        }
        case PhiCategory::Location: {
            if (ordinal % 2 == 0) {
                constexpr std::array<std::string_view, 2> tpls = {
                    "Home address on file: {}.",
                    "Resides at {} with family.",
                };
                return {std::string(tpls[(ordinal / 2) % tpls.size()]), make_address(rng),
                        category};
            }
            constexpr std::array<std::string_view, 2> tpls = {
                "The patient was transferred from {}.",
                "Followup imaging scheduled at {}.",
            };
            return {std::string(tpls[(ordinal / 2) % tpls.size()]),
                    std::string(pools::kFacilities[rng.below(pools::kFacilities.size())]),
                    category};
        }
        case PhiCategory::Age: {
            bool years = ordinal % 2 == 0;
            return {years ? "The patient is {}." : "Chart lists {} at intake.",
                    make_age(rng, years), category};
        }
        case PhiCategory::Date: {
            constexpr std::array<std::string_view, 4> tpls = {
                "Record date: {}.",
                "Seen on {} for routine followup.",
                "Labs were drawn on {}.",
                "Next appointment {}.",
            };
            return {std::string(tpls[ordinal % tpls.size()]), make_date(rng), category};
        }
        case PhiCategory::Contact: {
            if (ordinal % 3 == 2) {
                return {"Email {} for outside records.", make_email(rng), category};
            }
            constexpr std::array<std::string_view, 2> tpls = {
                "Call {} with any questions.",
                "Fax results to {} before the visit.",
            };
            return {std::string(tpls[ordinal % 2]), make_phone(rng), category};
        }
        case PhiCategory::Id: {
            constexpr std::array<std::string_view, 3> tpls = {
                "MRN {} was verified at registration.",
                "Record number {} on file.",
                "Insurance ID {} confirmed with carrier.",
            };
            return {std::string(tpls[ordinal % tpls.size()]), make_id(rng), category};
        }
        case PhiCategory::Others: break;
    }
    throw InvalidSpec("no surrogate pool for category OTHERS");
}

AnnotatedDocument generate_document(std::size_t index, const SyntheticSpec& spec,
                                    std::uint64_t doc_seed) {
    Rng rng(doc_seed);
    NoteBuilder note;

    std::vector<EntitySentence> sentences;
    std::optional<std::string> record_date;
    for (PhiCategory category : kConcreteCategories) {
        auto it = spec.per_category.find(category);
        std::size_t count = it == spec.per_category.end() ? 0 : it->second;
        for (std::size_t k = 0; k < count; ++k) {
            EntitySentence s = compose(category, k, rng);
            if (category == PhiCategory::Date && !record_date) record_date = s.surface;
            sentences.push_back(std::move(s));
        }
    }

    // Deterministic shuffle so categories interleave like prose rather than
    // appearing in blocks.
    for (std::size_t i = sentences.size(); i > 1; --i) {
        std::swap(sentences[i - 1], sentences[rng.below(i)]);
    }

    char header[64];
    std::snprintf(header, sizeof(header), "Clinical note %05zu.", index + 1);
    note.literal(header);
    note.literal("\n");
    note.literal(kFiller[rng.below(kFiller.size())]);
    std::size_t since_break = 0;
    for (const EntitySentence& s : sentences) {
        note.literal(++since_break % 3 == 0 ? "\n" : " ");
        note.sentence(s.tpl, s.surface, s.category);
        if (rng.below(4) == 0) {
            note.literal(" ");
            note.literal(kFiller[rng.below(kFiller.size())]);
        }
    }
    note.literal("\n");
    note.literal(kFiller[rng.below(kFiller.size())]);
    note.literal("\n");

    AnnotatedDocument out;
    char id[32];
    std::snprintf(id, sizeof(id), "syn-%05zu", index + 1);
    out.doc.doc_id = id;
    out.doc.text = note.take_text();
    out.doc.record_date = record_date;
    out.doc.source = CorpusSource::Synthetic;
    out.spans = note.take_spans();
    return out;
}

}  // namespace

std::vector<AnnotatedDocument> generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_docs == 0) throw InvalidSpec("n_docs must be positive");
    std::size_t total = 0;
    for (const auto& [category, count] : spec.per_category) {
        if (category == PhiCategory::Others && count > 0) {
            throw InvalidSpec("no surrogate pool for category OTHERS");
        }
        total += count;
    }
    if (total == 0) throw InvalidSpec("at least one per-category count must be positive");

    Rng corpus_rng(spec.seed);
    std::vector<AnnotatedDocument> docs;
    docs.reserve(spec.n_docs);
    for (std::size_t i = 0; i < spec.n_docs; ++i) {
        docs.push_back(generate_document(i, spec, corpus_rng.fork_seed()));
    }
    return docs;
}

}  // namespace deid
