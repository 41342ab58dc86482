#include "deid/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include "deid/errors.hpp"
#include "deid/utf8.hpp"

namespace deid {

namespace {

// ---------------------------------------------------------------------------
// Minimal strict XML reader covering the i2b2 schema: prolog, comments,
// CDATA, entity references, attributes, nested elements. No namespaces, no
// DTD expansion.
// ---------------------------------------------------------------------------

struct XmlNode {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::string text;  // concatenated character data including CDATA
    std::vector<XmlNode> children;

    const std::string* attr(std::string_view key) const {
        for (const auto& [k, v] : attrs) {
            if (k == key) return &v;
        }
        return nullptr;
    }
};

class XmlReader {
  public:
    explicit XmlReader(std::string_view input) : in_(input) {}

    XmlNode parse_document() {
        skip_misc();
        if (!looking_at("<")) fail("expected root element");
        XmlNode root = parse_element();
        skip_misc();
        if (pos_ != in_.size()) fail("trailing content after root element");
        return root;
    }

  private:
    std::string_view in_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        std::ostringstream os;
        os << "malformed XML at byte " << pos_ << ": " << what;
        throw MalformedXml(os.str());
    }

    bool looking_at(std::string_view s) const { return in_.compare(pos_, s.size(), s) == 0; }

    void skip_ws() {
        while (pos_ < in_.size() && std::isspace(static_cast<unsigned char>(in_[pos_]))) ++pos_;
    }

    void skip_until(std::string_view terminator, const char* what) {
        std::size_t end = in_.find(terminator, pos_);
        if (end == std::string_view::npos) fail(std::string("unterminated ") + what);
        pos_ = end + terminator.size();
    }

    // Whitespace, prolog, comments, processing instructions, DOCTYPE.
    void skip_misc() {
        for (;;) {
            skip_ws();
            if (looking_at("<?")) {
                skip_until("?>", "processing instruction");
            } else if (looking_at("<!--")) {
                skip_until("-->", "comment");
            } else if (looking_at("<!DOCTYPE")) {
                skip_until(">", "DOCTYPE");
            } else {
                return;
            }
        }
    }

    std::string parse_name() {
        std::size_t start = pos_;
        while (pos_ < in_.size()) {
            char c = in_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
                c == '.' || c == ':') {
                ++pos_;
            } else {
                break;
            }
        }
        if (pos_ == start) fail("expected name");
        return std::string(in_.substr(start, pos_ - start));
    }

    std::string unescape(std::string_view raw) {
        std::string out;
        out.reserve(raw.size());
        for (std::size_t i = 0; i < raw.size();) {
            if (raw[i] != '&') {
                out += raw[i++];
                continue;
            }
            std::size_t semi = raw.find(';', i);
            if (semi == std::string_view::npos) fail("unterminated entity reference");
            std::string_view ent = raw.substr(i + 1, semi - i - 1);
            if (ent == "lt") out += '<';
            else if (ent == "gt") out += '>';
            else if (ent == "amp") out += '&';
            else if (ent == "apos") out += '\'';
            else if (ent == "quot") out += '"';
            else if (!ent.empty() && ent[0] == '#') {
                std::uint32_t code = 0;
                bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
                std::string_view digits = ent.substr(hex ? 2 : 1);
                if (digits.empty()) fail("empty character reference");
                for (char d : digits) {
                    std::uint32_t v;
                    if (d >= '0' && d <= '9') v = static_cast<std::uint32_t>(d - '0');
                    else if (hex && d >= 'a' && d <= 'f') v = static_cast<std::uint32_t>(d - 'a' + 10);
                    else if (hex && d >= 'A' && d <= 'F') v = static_cast<std::uint32_t>(d - 'A' + 10);
                    else fail("bad character reference");
                    code = code * (hex ? 16 : 10) + v;
                }
                append_scalar(out, code);
            } else {
                fail("unknown entity reference");
            }
            i = semi + 1;
        }
        return out;
    }

    static void append_scalar(std::string& out, std::uint32_t code) {
        if (code < 0x80) {
            out += static_cast<char>(code);
        } else if (code < 0x800) {
            out += static_cast<char>(0xC0 | (code >> 6));
            out += static_cast<char>(0x80 | (code & 0x3F));
        } else if (code < 0x10000) {
            out += static_cast<char>(0xE0 | (code >> 12));
            out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (code & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (code >> 18));
            out += static_cast<char>(0x80 | ((code >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (code & 0x3F));
        }
    }

    void parse_attributes(XmlNode& node) {
        for (;;) {
            skip_ws();
            if (pos_ >= in_.size()) fail("unterminated start tag");
            char c = in_[pos_];
            if (c == '>' || c == '/') return;
            std::string key = parse_name();
            skip_ws();
            if (pos_ >= in_.size() || in_[pos_] != '=') fail("expected '=' in attribute");
            ++pos_;
            skip_ws();
            if (pos_ >= in_.size() || (in_[pos_] != '"' && in_[pos_] != '\'')) {
                fail("expected quoted attribute value");
            }
            char quote = in_[pos_++];
            std::size_t end = in_.find(quote, pos_);
            if (end == std::string_view::npos) fail("unterminated attribute value");
            node.attrs.emplace_back(std::move(key), unescape(in_.substr(pos_, end - pos_)));
            pos_ = end + 1;
        }
    }

    XmlNode parse_element() {
        if (!looking_at("<")) fail("expected element");
        ++pos_;
        XmlNode node;
        node.name = parse_name();
        parse_attributes(node);
        if (looking_at("/>")) {
            pos_ += 2;
            return node;
        }
        if (!looking_at(">")) fail("expected '>'");
        ++pos_;
        // Content: character data, CDATA, comments and child elements until
        // the matching end tag.
        for (;;) {
            if (pos_ >= in_.size()) fail("unterminated element <" + node.name + ">");
            if (looking_at("</")) {
                pos_ += 2;
                std::string end_name = parse_name();
                if (end_name != node.name) {
                    fail("mismatched end tag </" + end_name + "> for <" + node.name + ">");
                }
                skip_ws();
                if (!looking_at(">")) fail("expected '>' after end tag name");
                ++pos_;
                return node;
            }
            if (looking_at("<![CDATA[")) {
                pos_ += 9;
                std::size_t end = in_.find("]]>", pos_);
                if (end == std::string_view::npos) fail("unterminated CDATA section");
                node.text.append(in_.substr(pos_, end - pos_));
                pos_ = end + 3;
                continue;
            }
            if (looking_at("<!--")) {
                skip_until("-->", "comment");
                continue;
            }
            if (looking_at("<")) {
                node.children.push_back(parse_element());
                continue;
            }
            std::size_t next = in_.find('<', pos_);
            if (next == std::string_view::npos) fail("unterminated element <" + node.name + ">");
            node.text += unescape(in_.substr(pos_, next - pos_));
            pos_ = next;
        }
    }
};

// ---------------------------------------------------------------------------
// Tag interpretation
// ---------------------------------------------------------------------------

std::string to_upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

// i2b2 2014 subtype labels folded into the coarse dataset categories.
std::optional<PhiCategory> category_from_label(std::string_view label) {
    std::string up = to_upper(label);
    if (auto cat = phi_category_from_string(up)) return cat;
    if (up == "PATIENT" || up == "DOCTOR" || up == "USERNAME") return PhiCategory::Name;
    if (up == "HOSPITAL" || up == "ORGANIZATION" || up == "STREET" || up == "CITY" ||
        up == "STATE" || up == "COUNTRY" || up == "ZIP" || up == "LOCATION-OTHER") {
        return PhiCategory::Location;
    }
    if (up == "PHONE" || up == "FAX" || up == "EMAIL" || up == "URL" || up == "IPADDR" ||
        up == "IPADDRESS") {
        return PhiCategory::Contact;
    }
    if (up == "SSN" || up == "MEDICALRECORD" || up == "HEALTHPLAN" || up == "ACCOUNT" ||
        up == "LICENSE" || up == "VEHICLE" || up == "DEVICE" || up == "BIOID" ||
        up == "IDNUM") {
        return PhiCategory::Id;
    }
    return std::nullopt;
}

PhiCategory resolve_category(const XmlNode& tag) {
    if (auto cat = category_from_label(tag.name)) return *cat;
    if (const std::string* type = tag.attr("TYPE")) {
        if (auto cat = category_from_label(*type)) return *cat;
    }
    return PhiCategory::Others;
}

std::size_t parse_offset(const XmlNode& tag, const char* key, std::string_view doc_id) {
    const std::string* raw = tag.attr(key);
    if (!raw) {
        throw MalformedXml("doc " + std::string(doc_id) + ": tag <" + tag.name +
                           "> missing attribute '" + key + "'");
    }
    try {
        long long v = std::stoll(*raw);
        if (v < 0) throw std::out_of_range("negative");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw MalformedXml("doc " + std::string(doc_id) + ": tag <" + tag.name +
                           "> has non-numeric offset '" + *raw + "'");
    }
}

// Merge overlapping annotations into the containing span, keeping the outer
// span's category; hand-annotated corpora occasionally nest tags.
std::vector<AnnotatedSpan> merge_overlaps(std::vector<AnnotatedSpan> spans,
                                          const std::string& text, const Utf8Index& index) {
    if (spans.size() < 2) return spans;
    std::sort(spans.begin(), spans.end(), [](const AnnotatedSpan& a, const AnnotatedSpan& b) {
        if (a.start != b.start) return a.start < b.start;
        return a.end > b.end;  // containing span first on equal starts
    });
    std::vector<AnnotatedSpan> merged;
    merged.push_back(spans.front());
    for (std::size_t i = 1; i < spans.size(); ++i) {
        AnnotatedSpan& cur = merged.back();
        if (spans[i].start < cur.end) {
            if (spans[i].end > cur.end) {
                cur.end = spans[i].end;
                cur.surface = std::string(
                    text.substr(index.byte_of(cur.start), index.byte_of(cur.end) - index.byte_of(cur.start)));
            }
            // fully nested: dropped, outer category kept
        } else {
            merged.push_back(spans[i]);
        }
    }
    return merged;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failure on " + path.string());
    return buf.str();
}

}  // namespace

AnnotatedDocument parse_i2b2_xml(std::string_view raw, std::string_view fallback_id) {
    XmlReader reader(raw);
    XmlNode root = reader.parse_document();

    AnnotatedDocument out;
    out.doc.source = CorpusSource::I2b2Xml;
    if (const std::string* id = root.attr("id"); id && !id->empty()) {
        out.doc.doc_id = *id;
    } else {
        out.doc.doc_id = fallback_id.empty() ? "doc" : std::string(fallback_id);
    }
    if (const std::string* rd = root.attr("record_date"); rd && !rd->empty()) {
        out.doc.record_date = *rd;
    }

    const XmlNode* text_node = nullptr;
    std::vector<const XmlNode*> tag_nodes;
    for (const XmlNode& child : root.children) {
        std::string up = to_upper(child.name);
        if (up == "TEXT") {
            if (text_node) throw MalformedXml("doc " + out.doc.doc_id + ": multiple TEXT elements");
            text_node = &child;
        } else if (up == "TAGS") {
            for (const XmlNode& tag : child.children) tag_nodes.push_back(&tag);
        } else {
            // schema variant: tags directly under the root
            tag_nodes.push_back(&child);
        }
    }
    if (!text_node) throw MalformedXml("doc " + out.doc.doc_id + ": missing TEXT element");
    out.doc.text = text_node->text;
    if (out.doc.text.empty()) throw MalformedXml("doc " + out.doc.doc_id + ": empty TEXT body");

    Utf8Index index(out.doc.text);
    const std::size_t n_scalars = index.scalars();
    const std::size_t n_bytes = out.doc.text.size();

    std::vector<AnnotatedSpan> spans;
    for (const XmlNode* tag : tag_nodes) {
        std::size_t start = parse_offset(*tag, "start", out.doc.doc_id);
        std::size_t end = parse_offset(*tag, "end", out.doc.doc_id);
        const std::string* declared = tag->attr("text");

        auto scalar_surface = [&](std::size_t s, std::size_t e) -> std::optional<std::string> {
            if (s >= e || e > n_scalars) return std::nullopt;
            std::size_t bs = index.byte_of(s);
            std::size_t be = index.byte_of(e);
            return out.doc.text.substr(bs, be - bs);
        };

        std::optional<std::string> as_scalars = scalar_surface(start, end);
        std::size_t span_start = start;
        std::size_t span_end = end;
        std::optional<std::string> surface = as_scalars;

        if (declared) {
            if (!as_scalars || *as_scalars != *declared) {
                // fall back to interpreting the file's offsets as UTF-8 bytes
                std::optional<std::string> as_bytes;
                if (!index.ascii() && start < end && end <= n_bytes) {
                    as_bytes = out.doc.text.substr(start, end - start);
                }
                if (as_bytes && *as_bytes == *declared) {
                    span_start = index.scalar_of(start);
                    span_end = index.scalar_of(end);
                    surface = as_bytes;
                } else {
                    std::ostringstream os;
                    os << "doc " << out.doc.doc_id << ": tag <" << tag->name << "> offsets ["
                       << start << "," << end << ") expected \"" << *declared << "\" found \""
                       << (as_scalars ? *as_scalars : std::string("<out of range>")) << "\"";
                    throw OffsetMismatch(os.str());
                }
            }
        } else if (!as_scalars) {
            std::ostringstream os;
            os << "doc " << out.doc.doc_id << ": tag <" << tag->name << "> offsets [" << start
               << "," << end << ") out of range (text has " << n_scalars << " scalars)";
            throw OffsetMismatch(os.str());
        }

        spans.push_back(AnnotatedSpan{span_start, span_end, resolve_category(*tag), *surface});
    }

    out.spans = merge_overlaps(std::move(spans), out.doc.text, index);
    return out;
}

namespace {

std::string escape_attr(std::string_view value) {
    std::string out;
    out.reserve(value.size());
    for (char c : value) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\n': out += "&#10;"; break;
            case '\r': out += "&#13;"; break;
            case '\t': out += "&#9;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string cdata(std::string_view text) {
    std::string out = "<![CDATA[";
    std::size_t pos = 0;
    for (;;) {
        std::size_t hit = text.find("]]>", pos);
        if (hit == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        out.append(text.substr(pos, hit - pos));
        out += "]]]]><![CDATA[>";  // split the CDATA terminator
        pos = hit + 3;
    }
    out += "]]>";
    return out;
}

}  // namespace

std::string to_i2b2_xml(const AnnotatedDocument& doc) {
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<deIdi2b2 id=\"" << escape_attr(doc.doc.doc_id) << "\"";
    if (doc.doc.record_date) os << " record_date=\"" << escape_attr(*doc.doc.record_date) << "\"";
    os << ">\n";
    os << "<TEXT>" << cdata(doc.doc.text) << "</TEXT>\n";
    os << "<TAGS>\n";
    for (std::size_t i = 0; i < doc.spans.size(); ++i) {
        const AnnotatedSpan& s = doc.spans[i];
        os << "<" << to_string(s.category) << " id=\"P" << i << "\" start=\"" << s.start
           << "\" end=\"" << s.end << "\" text=\"" << escape_attr(s.surface) << "\" TYPE=\""
           << to_string(s.category) << "\"/>\n";
    }
    os << "</TAGS>\n";
    os << "</deIdi2b2>\n";
    return os.str();
}

CorpusLoad load_corpus(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw IoError("not a readable directory: " + dir.string());
    }

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".xml") files.push_back(entry.path());
    }
    if (ec) throw IoError("cannot list directory " + dir.string() + ": " + ec.message());
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename() < b.filename(); });

    // Parse in parallel; results keep filename order regardless of
    // scheduling because each worker writes only its own slot.
    std::vector<std::optional<AnnotatedDocument>> slots(files.size());
    std::vector<std::string> errors(files.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= files.size()) return;
            try {
                std::string raw = read_file(files[i]);
                slots[i] = parse_i2b2_xml(raw, files[i].stem().string());
            } catch (const std::exception& e) {
                errors[i] = files[i].filename().string() + ": " + e.what();
            }
        }
    };
    std::size_t n_workers = std::min<std::size_t>(
        files.size(), std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i + 1 < n_workers; ++i) threads.emplace_back(worker);
    worker();
    for (std::thread& t : threads) t.join();

    CorpusLoad out;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (slots[i]) {
            out.docs.push_back(std::move(*slots[i]));
        } else {
            ++out.skipped;
            out.skip_reasons.push_back(errors[i]);
        }
    }
    if (out.docs.empty()) {
        throw EmptyCorpus("no parseable .xml files in " + dir.string());
    }
    return out;
}

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::OutOfRange: return "OUT_OF_RANGE";
        case ViolationKind::EmptyRange: return "EMPTY_RANGE";
        case ViolationKind::SurfaceMismatch: return "SURFACE_MISMATCH";
        case ViolationKind::Overlap: return "OVERLAP";
    }
    return "OUT_OF_RANGE";
}

std::vector<AnnotationViolation> validate_annotations(const ClinicalDocument& doc,
                                                      const std::vector<AnnotatedSpan>& spans) {
    std::vector<AnnotationViolation> violations;
    Utf8Index index(doc.text);
    const std::size_t n = index.scalars();

    auto add = [&](std::size_t i, ViolationKind kind, std::string message) {
        violations.push_back(AnnotationViolation{i, kind, std::move(message)});
    };

    for (std::size_t i = 0; i < spans.size(); ++i) {
        const AnnotatedSpan& s = spans[i];
        std::ostringstream os;
        if (s.start >= s.end) {
            os << "span " << i << ": start " << s.start << " >= end " << s.end;
            add(i, ViolationKind::EmptyRange, os.str());
            continue;
        }
        if (s.end > n) {
            os << "span " << i << ": end " << s.end << " > text length " << n;
            add(i, ViolationKind::OutOfRange, os.str());
            continue;
        }
        std::size_t bs = index.byte_of(s.start);
        std::size_t be = index.byte_of(s.end);
        std::string_view found(doc.text.data() + bs, be - bs);
        if (found != s.surface) {
            os << "span " << i << ": surface \"" << s.surface << "\" != text[" << s.start << ".."
               << s.end << ") \"" << found << "\"";
            add(i, ViolationKind::SurfaceMismatch, os.str());
        }
    }

    // overlap check over the spans with sane ranges
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (spans[i].start < spans[i].end && spans[i].end <= n) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return spans[a].start < spans[b].start;
    });
    std::size_t max_end = 0;
    std::size_t max_idx = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        std::size_t i = order[k];
        if (k > 0 && spans[i].start < max_end) {
            std::ostringstream os;
            os << "span " << i << " overlaps span " << max_idx << ": [" << spans[i].start << ","
               << spans[i].end << ") vs [" << spans[max_idx].start << "," << spans[max_idx].end
               << ")";
            add(i, ViolationKind::Overlap, os.str());
        }
        if (spans[i].end > max_end) {
            max_end = spans[i].end;
            max_idx = i;
        }
    }
    return violations;
}

}  // namespace deid
