#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "deid/types.hpp"

namespace deid {

// Parse one i2b2-style XML document: a root element holding a TEXT body and
// a TAGS list of PHI entities with start/end/TYPE attributes. Offsets in the
// returned spans count Unicode scalar values; source files carrying byte
// offsets are converted when the scalar reading does not select the declared
// surface. Overlapping raw annotations are merged into the containing span,
// keeping the outer span's category.
//
// Throws MalformedXml on syntax failure and OffsetMismatch when a tag's
// offsets select neither its declared surface under the scalar nor the byte
// convention.
AnnotatedDocument parse_i2b2_xml(std::string_view raw, std::string_view fallback_id = "doc");

// Serialize back to the same XML schema. parse_i2b2_xml(to_i2b2_xml(d))
// yields equal text and an equal span set.
std::string to_i2b2_xml(const AnnotatedDocument& doc);

struct CorpusLoad {
    std::vector<AnnotatedDocument> docs;  // sorted by filename
    std::size_t skipped = 0;
    std::vector<std::string> skip_reasons;
};

// Load every *.xml file under `dir` (non-recursive), one document per file,
// in filename order. Files that fail to parse are skipped and reported.
// Throws IoError when the directory is unusable, EmptyCorpus when no file
// parses.
CorpusLoad load_corpus(const std::filesystem::path& dir);

// Deterministic synthetic corpus with gold spans; see SyntheticSpec.
// Identical specs (including seed) produce byte-identical documents.
// Throws InvalidSpec.
std::vector<AnnotatedDocument> generate_synthetic(const SyntheticSpec& spec);

enum class ViolationKind {
    OutOfRange,       // end > text length, or offsets past the text
    EmptyRange,       // start >= end
    SurfaceMismatch,  // text[start..end) != surface
    Overlap,          // span intersects another span
};

std::string_view to_string(ViolationKind kind);

struct AnnotationViolation {
    std::size_t span_index = 0;
    ViolationKind kind = ViolationKind::OutOfRange;
    std::string message;  // names both indices for Overlap
};

// Check every AnnotatedSpan invariant; returns one entry per violation,
// empty when all hold. Violations are data, not failures.
std::vector<AnnotationViolation> validate_annotations(const ClinicalDocument& doc,
                                                      const std::vector<AnnotatedSpan>& spans);

// Canonical interchange manifest: line-delimited JSON records
// {doc_id, text, spans:[{start,end,category,surface}]}.
void write_manifest(std::ostream& out, const std::vector<AnnotatedDocument>& docs);
void write_manifest_file(const std::filesystem::path& path,
                         const std::vector<AnnotatedDocument>& docs);
std::vector<AnnotatedDocument> read_manifest(std::istream& in);
std::vector<AnnotatedDocument> read_manifest_file(const std::filesystem::path& path);

}  // namespace deid
