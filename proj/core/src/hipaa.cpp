#include "deid/hipaa.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <nlohmann/json.hpp>

#include "deid/errors.hpp"
#include "deid/llm_client.hpp"

namespace deid {

const std::array<HipaaIdentifier, 18>& hipaa_identifiers() {
    static const std::array<HipaaIdentifier, 18> table = {{
        {1, "Names"},
        {2, "All geographical address elements smaller than state"},
        {3, "All data elements related the individual (except year)"},
        {4, "Phone numbers"},
        {5, "Fax numbers"},
        {6, "Email addresses"},
        {7, "Social security numbers"},
        {8, "Medical record numbers"},
        {9, "Health plan beneficiary numbers"},
        {10, "Account numbers"},
        {11, "Certificate numbers"},
        {12, "Vehicle serial numbers and identifiers"},
        {13, "Device serial numbers and identifiers"},
        {14, "Web resource locators (URLs) and links"},
        {15, "IP addresses"},
        {16, "Biometric identifiers (e.g. fingerprint)"},
        {17, "Full face photographic images"},
        {18, "Any unique identifying number, code, or characteristic"},
    }};
    return table;
}

const std::vector<CategoryGloss>& default_category_glosses() {
    static const std::vector<CategoryGloss> glosses = {
        {PhiCategory::Name, "names and initials"},
        {PhiCategory::Profession, "professions occupations jobs"},
        {PhiCategory::Location, "geographical address location street city state hospital clinic"},
        {PhiCategory::Age, "age in years old"},
        {PhiCategory::Date, "dates record date data elements related to the individual year month day"},
        {PhiCategory::Contact,
         "contact phone fax email addresses pager web urls links ip numbers"},
        {PhiCategory::Id,
         "identifiers id numbers code medical record social security account certificate "
         "vehicle device serial health plan beneficiary unique identifying"},
    };
    return glosses;
}

namespace {

std::string lowercased(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

std::set<std::string> alnum_tokens(const std::string& lower) {
    std::set<std::string> tokens;
    std::string cur;
    for (char c : lower) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += c;
        } else if (!cur.empty()) {
            tokens.insert(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.insert(std::move(cur));
    return tokens;
}

std::set<std::string> trigrams(const std::string& lower) {
    std::set<std::string> grams;
    if (lower.size() >= 3) {
        for (std::size_t i = 0; i + 3 <= lower.size(); ++i) grams.insert(lower.substr(i, 3));
    }
    return grams;
}

template <typename Set>
double jaccard(const Set& a, const Set& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

double lexical_similarity(std::string_view a, std::string_view b) {
    std::string la = lowercased(a);
    std::string lb = lowercased(b);
    if (la == lb) return 1.0;
    double token_term = jaccard(alnum_tokens(la), alnum_tokens(lb));
    double trigram_term = jaccard(trigrams(la), trigrams(lb));
    return (token_term + trigram_term) / 2.0;
}

std::vector<CategoryMapping> map_identifiers(std::span<const HipaaIdentifier> identifiers,
                                             std::span<const CategoryGloss> categories,
                                             const SimilarityScorer& scorer, double threshold) {
    if (threshold < 0.0 || threshold > 1.0) {
        throw InvalidThreshold("threshold must be in [0,1], got " + std::to_string(threshold));
    }
    std::vector<CategoryMapping> mappings;
    mappings.reserve(identifiers.size());
    for (const HipaaIdentifier& identifier : identifiers) {
        double best = 0.0;
        PhiCategory best_category = PhiCategory::Others;
        bool first = true;
        for (const CategoryGloss& gloss : categories) {
            double s = scorer(identifier.label, gloss.gloss);
            // strict > keeps the lowest ordinal on ties; glosses are scored
            // in declaration order
            if (first || s > best) {
                best = s;
                best_category = gloss.category;
                first = false;
            }
        }
        CategoryMapping m;
        m.identifier = identifier;
        m.score = best;
        m.threshold = threshold;
        m.category = (!first && best >= threshold) ? best_category : PhiCategory::Others;
        mappings.push_back(std::move(m));
    }
    return mappings;
}

std::vector<CategoryMapping> map_identifiers(double threshold) {
    const auto& glosses = default_category_glosses();
    return map_identifiers(std::span(hipaa_identifiers()),
                           std::span(glosses.data(), glosses.size()),
                           SimilarityScorer(&lexical_similarity), threshold);
}

SimilarityScorer llm_similarity_scorer(ChatClient& client, std::string model,
                                       std::function<void(std::string)> warn) {
    return [&client, model = std::move(model),
            warn = std::move(warn)](std::string_view a, std::string_view b) -> double {
        ChatRequest request;
        request.model = model;
        request.temperature = 0.0;
        request.messages.push_back(
            {ChatRole::System,
             "Rate the semantic similarity of the two phrases on a scale from 0 to 100. "
             "Reply with the number only."});
        request.messages.push_back(
            {ChatRole::User, "Phrase A: " + std::string(a) + "\nPhrase B: " + std::string(b)});

        auto parse_score = [](const std::string& content) -> std::optional<double> {
            std::size_t i = 0;
            while (i < content.size() && !std::isdigit(static_cast<unsigned char>(content[i]))) {
                ++i;
            }
            if (i == content.size()) return std::nullopt;
            double v = 0.0;
            while (i < content.size() && std::isdigit(static_cast<unsigned char>(content[i]))) {
                v = v * 10.0 + (content[i] - '0');
                ++i;
            }
            return v;
        };

        for (int attempt = 0; attempt < 2; ++attempt) {
            ChatResponse response = client.send_chat(request);
            if (auto v = parse_score(response.content)) {
                return std::clamp(*v / 100.0, 0.0, 1.0);
            }
        }
        if (warn) {
            warn("similarity scorer: non-numeric reply twice for \"" + std::string(a) +
                 "\" vs \"" + std::string(b) + "\", scoring 0.0");
        }
        return 0.0;
    };
}

std::string mapping_table_json(const std::vector<CategoryMapping>& mappings) {
    nlohmann::ordered_json table = nlohmann::ordered_json::array();
    for (const CategoryMapping& m : mappings) {
        nlohmann::ordered_json row;
        row["index"] = m.identifier.index;
        row["label"] = m.identifier.label;
        row["category"] = to_string(m.category);
        row["score"] = m.score;
        row["threshold"] = m.threshold;
        table.push_back(std::move(row));
    }
    return table.dump(2) + "\n";
}

}  // namespace deid
