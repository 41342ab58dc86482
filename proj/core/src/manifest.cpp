#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deid/corpus.hpp"
#include "deid/errors.hpp"

namespace deid {

using ordered_json = nlohmann::ordered_json;

void write_manifest(std::ostream& out, const std::vector<AnnotatedDocument>& docs) {
    for (const AnnotatedDocument& d : docs) {
        ordered_json record;
        record["doc_id"] = d.doc.doc_id;
        record["text"] = d.doc.text;
        ordered_json spans = ordered_json::array();
        for (const AnnotatedSpan& s : d.spans) {
            ordered_json span;
            span["start"] = s.start;
            span["end"] = s.end;
            span["category"] = to_string(s.category);
            span["surface"] = s.surface;
            spans.push_back(std::move(span));
        }
        record["spans"] = std::move(spans);
        out << record.dump() << '\n';
    }
}

void write_manifest_file(const std::filesystem::path& path,
                         const std::vector<AnnotatedDocument>& docs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_manifest(out, docs);
    out.flush();
    if (!out) throw IoError("write failure on " + path.string());
}

std::vector<AnnotatedDocument> read_manifest(std::istream& in) {
    std::vector<AnnotatedDocument> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json record;
        try {
            record = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw IoError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        AnnotatedDocument d;
        try {
            d.doc.doc_id = record.at("doc_id").get<std::string>();
            d.doc.text = record.at("text").get<std::string>();
            for (const auto& span : record.at("spans")) {
                AnnotatedSpan s;
                s.start = span.at("start").get<std::size_t>();
                s.end = span.at("end").get<std::size_t>();
                std::string category = span.at("category").get<std::string>();
                auto cat = phi_category_from_string(category);
                if (!cat) {
                    throw IoError("manifest line " + std::to_string(line_no) +
                                  ": unknown category " + category);
                }
                s.category = *cat;
                s.surface = span.at("surface").get<std::string>();
                d.spans.push_back(std::move(s));
            }
        } catch (const nlohmann::json::exception& e) {
            throw IoError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        if (d.doc.doc_id.empty() || d.doc.text.empty()) {
            throw IoError("manifest line " + std::to_string(line_no) +
                          ": doc_id and text must be non-empty");
        }
        docs.push_back(std::move(d));
    }
    return docs;
}

std::vector<AnnotatedDocument> read_manifest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_manifest(in);
}

}  // namespace deid
