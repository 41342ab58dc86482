#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deid/types.hpp"

namespace deid {

class ChatClient;

// One of the 18 HIPAA Safe Harbor identifiers.
struct HipaaIdentifier {
    int index = 0;  // 1..18
    std::string label;
};

// The canonical identifier table, indices 1..18.
const std::array<HipaaIdentifier, 18>& hipaa_identifiers();

// Short descriptive phrase for one dataset PHI category; the similarity
// voting scores identifier labels against these.
struct CategoryGloss {
    PhiCategory category = PhiCategory::Others;
    std::string gloss;
};

// Default glosses for the seven concrete categories (OTHERS excluded).
const std::vector<CategoryGloss>& default_category_glosses();

// Offline similarity: mean of token-set Jaccard over lowercased alphanumeric
// tokens and character-trigram Jaccard over the lowercased strings.
// Symmetric, in [0,1], 1.0 for inputs identical after lowercasing.
double lexical_similarity(std::string_view a, std::string_view b);

using SimilarityScorer = std::function<double(std::string_view, std::string_view)>;

struct CategoryMapping {
    HipaaIdentifier identifier;
    PhiCategory category = PhiCategory::Others;
    double score = 0.0;
    double threshold = 0.0;
};

inline constexpr double kDefaultMappingThreshold = 0.2;

// Similarity voting: each identifier goes to its argmax-similarity category
// when the best score clears `threshold`, otherwise to OTHERS. Ties break to
// the lowest category ordinal. Throws InvalidThreshold unless
// 0 <= threshold <= 1.
std::vector<CategoryMapping> map_identifiers(std::span<const HipaaIdentifier> identifiers,
                                             std::span<const CategoryGloss> categories,
                                             const SimilarityScorer& scorer, double threshold);

// Convenience: full table, default glosses and scorer.
std::vector<CategoryMapping> map_identifiers(double threshold = kDefaultMappingThreshold);

// Scorer that asks a chat model to rate similarity 0-100 and normalizes to
// [0,1]. Non-numeric replies are retried once, then scored 0.0 with a
// warning through `warn`. Transport errors propagate.
SimilarityScorer llm_similarity_scorer(ChatClient& client, std::string model,
                                       std::function<void(std::string)> warn = {});

// JSON array [{index,label,category,score,threshold}], serialized.
std::string mapping_table_json(const std::vector<CategoryMapping>& mappings);

}  // namespace deid
