#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deid/types.hpp"

namespace deid {

// One replaced surface and the synthetic value standing in for it.
struct SurrogateAssignment {
    std::string original;
    std::string surrogate;
    PhiCategory category = PhiCategory::Others;
};

struct SurrogateResult {
    std::string text;
    std::vector<SurrogateAssignment> assignments;
    std::vector<std::string> warnings;  // e.g. OTHERS spans given a generic placeholder
};

// Replace every span with a category-appropriate surrogate drawn from the
// same pools as the synthetic generator. Deterministic per seed; identical
// surfaces within one call map to identical surrogates; DATE spans shift by
// one per-document offset in [30y, 60y] so chronology survives; ID/CONTACT
// values keep their shape digit-for-digit. Surrogates never collide with a
// surface string present in the original text (bounded resampling, then
// suffix disambiguation). Non-span characters are byte-identical.
//
// Throws SpanOutOfRange / OverlappingSpans on invalid spans.
SurrogateResult surrogate_replace(std::string_view text, const std::vector<AnnotatedSpan>& spans,
                                  std::uint64_t seed);

// Audit table as JSON. Re-identifying material: the pipeline only writes it
// behind an explicit flag.
std::string assignments_json(const std::vector<SurrogateAssignment>& assignments);

}  // namespace deid
