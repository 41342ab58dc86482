#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deid {

// PHI categories used by the dataset-side annotation scheme. OTHERS is the
// sink for identifiers that map to no concrete category.
enum class PhiCategory {
    Name = 0,
    Profession,
    Location,
    Age,
    Date,
    Contact,
    Id,
    Others,
};

inline constexpr std::size_t kCategoryCount = 8;

// All categories except OTHERS, in canonical order.
inline constexpr std::array<PhiCategory, 7> kConcreteCategories = {
    PhiCategory::Name,     PhiCategory::Profession, PhiCategory::Location,
    PhiCategory::Age,      PhiCategory::Date,       PhiCategory::Contact,
    PhiCategory::Id,
};

std::string_view to_string(PhiCategory category);
std::optional<PhiCategory> phi_category_from_string(std::string_view name);

enum class CorpusSource {
    I2b2Xml,
    Synthetic,
};

std::string_view to_string(CorpusSource source);

// One free-text clinical note. `text` is UTF-8; all span offsets elsewhere
// count Unicode scalar values, not bytes.
struct ClinicalDocument {
    std::string doc_id;
    std::string text;
    std::optional<std::string> record_date;
    CorpusSource source = CorpusSource::I2b2Xml;
};

// A gold PHI occurrence. Offsets are scalar-value positions into the
// document text, start inclusive, end exclusive. `surface` must equal
// text[start..end).
struct AnnotatedSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    PhiCategory category = PhiCategory::Others;
    std::string surface;

    friend bool operator==(const AnnotatedSpan&, const AnnotatedSpan&) = default;
};

struct AnnotatedDocument {
    ClinicalDocument doc;
    std::vector<AnnotatedSpan> spans;
};

// Parameters for the synthetic corpus generator.
struct SyntheticSpec {
    std::size_t n_docs = 0;
    std::map<PhiCategory, std::size_t> per_category;
    std::uint64_t seed = 0;
};

}  // namespace deid
