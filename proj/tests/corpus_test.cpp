#include <doctest.h>

#include <sstream>

#include "deid/corpus.hpp"
#include "deid/errors.hpp"
#include "deid/utf8.hpp"
#include "helpers.hpp"

using namespace deid;
using deid::testing::TempDir;

namespace {

const char* kSimpleXml =
    "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    "<deIdi2b2 id=\"note-1\">\n"
    "<TEXT><![CDATA[Mr. Joshua Howard visited]]></TEXT>\n"
    "<TAGS>\n"
    "<NAME id=\"P0\" start=\"4\" end=\"17\" text=\"Joshua Howard\" TYPE=\"PATIENT\"/>\n"
    "</TAGS>\n"
    "</deIdi2b2>\n";

}  // namespace

TEST_CASE("parse_i2b2_xml extracts text and spans") {
    AnnotatedDocument doc = parse_i2b2_xml(kSimpleXml);
    CHECK(doc.doc.doc_id == "note-1");
    CHECK(doc.doc.text == "Mr. Joshua Howard visited");
    CHECK(doc.doc.source == CorpusSource::I2b2Xml);
    REQUIRE(doc.spans.size() == 1);
    CHECK(doc.spans[0].start == 4);
    CHECK(doc.spans[0].end == 17);
    CHECK(doc.spans[0].category == PhiCategory::Name);
    CHECK(doc.spans[0].surface == "Joshua Howard");
}

TEST_CASE("document with zero PHI tags parses to an empty span list") {
    AnnotatedDocument doc = parse_i2b2_xml(
        "<root><TEXT>plain note body</TEXT><TAGS></TAGS></root>", "fallback");
    CHECK(doc.doc.doc_id == "fallback");
    CHECK(doc.doc.text == "plain note body");
    CHECK(doc.spans.empty());
}

TEST_CASE("offset mismatch is rejected with context") {
    const char* xml =
        "<root><TEXT>0123456789abcdef</TEXT>"
        "<TAGS><DATE id=\"P0\" start=\"0\" end=\"10\" text=\"not-the-text\" TYPE=\"DATE\"/></TAGS>"
        "</root>";
    CHECK_THROWS_AS(parse_i2b2_xml(xml), OffsetMismatch);
    try {
        parse_i2b2_xml(xml, "doc-7");
    } catch (const OffsetMismatch& e) {
        std::string what = e.what();
        CHECK(what.find("doc-7") != std::string::npos);
        CHECK(what.find("DATE") != std::string::npos);
        CHECK(what.find("not-the-text") != std::string::npos);
        CHECK(what.find("0123456789") != std::string::npos);
    }
}

TEST_CASE("syntax failures raise MalformedXml") {
    CHECK_THROWS_AS(parse_i2b2_xml("<root><TEXT>x</TEXT>"), MalformedXml);
    CHECK_THROWS_AS(parse_i2b2_xml("no xml at all"), MalformedXml);
    CHECK_THROWS_AS(parse_i2b2_xml("<root><TEXT></TEXT></root>"), MalformedXml);
    CHECK_THROWS_AS(parse_i2b2_xml("<a><TEXT>x</TEXT></b>"), MalformedXml);
}

TEST_CASE("byte offsets in source files are converted to scalar offsets") {
    // "José García visited" -- byte offsets for García are 5..12, scalar 5..11
    const char* xml =
        "<root><TEXT>José García visited</TEXT>"
        "<TAGS><NAME id=\"P0\" start=\"6\" end=\"13\" text=\"García\" TYPE=\"PATIENT\"/></TAGS>"
        "</root>";
    // scalar reading of [6,13) is "arcía v" != "García"; byte reading matches
    AnnotatedDocument doc = parse_i2b2_xml(xml);
    REQUIRE(doc.spans.size() == 1);
    CHECK(doc.spans[0].start == 5);
    CHECK(doc.spans[0].end == 11);
    CHECK(scalar_substr(doc.doc.text, doc.spans[0].start, doc.spans[0].end) == "García");
}

TEST_CASE("overlapping raw annotations merge into the containing span") {
    const char* xml =
        "<root><TEXT>Dr. Joshua Howard Jr visited</TEXT><TAGS>"
        "<NAME id=\"P0\" start=\"4\" end=\"20\" text=\"Joshua Howard Jr\" TYPE=\"DOCTOR\"/>"
        "<NAME id=\"P1\" start=\"11\" end=\"17\" text=\"Howard\" TYPE=\"PATIENT\"/>"
        "</TAGS></root>";
    AnnotatedDocument doc = parse_i2b2_xml(xml);
    REQUIRE(doc.spans.size() == 1);
    CHECK(doc.spans[0].start == 4);
    CHECK(doc.spans[0].end == 20);
    CHECK(doc.spans[0].surface == "Joshua Howard Jr");
    CHECK(validate_annotations(doc.doc, doc.spans).empty());
}

TEST_CASE("partially overlapping annotations merge to one covering span") {
    const char* xml =
        "<root><TEXT>abcdefghij</TEXT><TAGS>"
        "<ID id=\"P0\" start=\"0\" end=\"5\" text=\"abcde\" TYPE=\"IDNUM\"/>"
        "<DATE id=\"P1\" start=\"3\" end=\"8\" text=\"defgh\" TYPE=\"DATE\"/>"
        "</TAGS></root>";
    AnnotatedDocument doc = parse_i2b2_xml(xml);
    REQUIRE(doc.spans.size() == 1);
    CHECK(doc.spans[0].start == 0);
    CHECK(doc.spans[0].end == 8);
    CHECK(doc.spans[0].category == PhiCategory::Id);  // outer span's category kept
    CHECK(doc.spans[0].surface == "abcdefgh");
}

TEST_CASE("serialize/parse round trip preserves text and spans") {
    AnnotatedDocument original = parse_i2b2_xml(kSimpleXml);
    SUBCASE("simple document") {}
    SUBCASE("text with CDATA terminator and entities") {
        original.doc.text = "tricky ]]> body & <tag> 'quoted' \"double\" Muñoz";
        original.spans.clear();
        original.spans.push_back(AnnotatedSpan{42, 47, PhiCategory::Name, "Muñoz"});
        REQUIRE(validate_annotations(original.doc, original.spans).empty());
    }
    SUBCASE("record date survives") { original.doc.record_date = "04/01/2060"; }

    std::string xml = to_i2b2_xml(original);
    AnnotatedDocument reparsed = parse_i2b2_xml(xml);
    CHECK(reparsed.doc.doc_id == original.doc.doc_id);
    CHECK(reparsed.doc.text == original.doc.text);
    CHECK(reparsed.doc.record_date == original.doc.record_date);
    CHECK(reparsed.spans == original.spans);
}

TEST_CASE("load_corpus returns filename order and reports skips") {
    TempDir dir;
    auto make_doc = [](const std::string& body) {
        return "<root><TEXT>" + body + "</TEXT><TAGS></TAGS></root>";
    };
    dir.write("b.xml", make_doc("second"));
    dir.write("a.xml", make_doc("first"));
    dir.write("c.xml", make_doc("third"));
    dir.write("ignored.txt", "not xml");

    SUBCASE("all valid") {
        CorpusLoad load = load_corpus(dir.path());
        REQUIRE(load.docs.size() == 3);
        CHECK(load.skipped == 0);
        CHECK(load.docs[0].doc.doc_id == "a");
        CHECK(load.docs[0].doc.text == "first");
        CHECK(load.docs[1].doc.doc_id == "b");
        CHECK(load.docs[2].doc.doc_id == "c");
    }

    SUBCASE("malformed files are skipped with a count") {
        dir.write("broken.xml", "<root><TEXT>oops");
        CorpusLoad load = load_corpus(dir.path());
        CHECK(load.docs.size() == 3);
        CHECK(load.skipped == 1);
        REQUIRE(load.skip_reasons.size() == 1);
        CHECK(load.skip_reasons[0].find("broken.xml") != std::string::npos);
    }
}

TEST_CASE("load_corpus error cases") {
    TempDir dir;
    CHECK_THROWS_AS(load_corpus(dir.path()), EmptyCorpus);
    CHECK_THROWS_AS(load_corpus(dir.path() / "missing"), IoError);
    dir.write("only.xml", "<root>");
    CHECK_THROWS_AS(load_corpus(dir.path()), EmptyCorpus);  // zero parseable
}

TEST_CASE("validate_annotations reports each violated invariant") {
    ClinicalDocument doc{"d", "0123456789", std::nullopt, CorpusSource::Synthetic};

    SUBCASE("clean spans") {
        std::vector<AnnotatedSpan> spans{{0, 3, PhiCategory::Id, "012"},
                                         {5, 7, PhiCategory::Id, "56"}};
        CHECK(validate_annotations(doc, spans).empty());
    }
    SUBCASE("end beyond text") {
        std::vector<AnnotatedSpan> spans{{8, 99, PhiCategory::Id, "89"}};
        auto violations = validate_annotations(doc, spans);
        REQUIRE(violations.size() == 1);
        CHECK(violations[0].kind == ViolationKind::OutOfRange);
        CHECK(violations[0].span_index == 0);
    }
    SUBCASE("empty range") {
        std::vector<AnnotatedSpan> spans{{4, 4, PhiCategory::Id, ""}};
        auto violations = validate_annotations(doc, spans);
        REQUIRE(violations.size() == 1);
        CHECK(violations[0].kind == ViolationKind::EmptyRange);
    }
    SUBCASE("surface mismatch") {
        std::vector<AnnotatedSpan> spans{{0, 2, PhiCategory::Id, "zz"}};
        auto violations = validate_annotations(doc, spans);
        REQUIRE(violations.size() == 1);
        CHECK(violations[0].kind == ViolationKind::SurfaceMismatch);
    }
    SUBCASE("overlap names both indices") {
        std::vector<AnnotatedSpan> spans{{0, 5, PhiCategory::Id, "01234"},
                                         {3, 7, PhiCategory::Date, "3456"}};
        auto violations = validate_annotations(doc, spans);
        REQUIRE(violations.size() == 1);
        CHECK(violations[0].kind == ViolationKind::Overlap);
        CHECK(violations[0].message.find("span 1") != std::string::npos);
        CHECK(violations[0].message.find("span 0") != std::string::npos);
    }
}

TEST_CASE("generate_synthetic honors per-category counts and offsets") {
    SyntheticSpec spec;
    spec.n_docs = 1;
    spec.per_category[PhiCategory::Name] = 2;
    spec.per_category[PhiCategory::Date] = 1;
    spec.seed = 7;

    auto docs = generate_synthetic(spec);
    REQUIRE(docs.size() == 1);
    std::size_t names = 0;
    std::size_t dates = 0;
    for (const AnnotatedSpan& s : docs[0].spans) {
        if (s.category == PhiCategory::Name) ++names;
        if (s.category == PhiCategory::Date) ++dates;
    }
    CHECK(names == 2);
    CHECK(dates == 1);
    CHECK(docs[0].spans.size() == 3);
    CHECK(validate_annotations(docs[0].doc, docs[0].spans).empty());
    CHECK(docs[0].doc.source == CorpusSource::Synthetic);
    CHECK(docs[0].doc.record_date.has_value());
}

TEST_CASE("generate_synthetic is byte-deterministic per seed") {
    SyntheticSpec spec;
    spec.n_docs = 4;
    for (PhiCategory c : kConcreteCategories) spec.per_category[c] = 2;
    spec.seed = 99;

    auto first = generate_synthetic(spec);
    auto second = generate_synthetic(spec);
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].doc.doc_id == second[i].doc.doc_id);
        CHECK(first[i].doc.text == second[i].doc.text);
        CHECK(first[i].spans == second[i].spans);
    }

    spec.seed = 100;
    auto shifted = generate_synthetic(spec);
    bool any_different = false;
    for (std::size_t i = 0; i < first.size(); ++i) {
        if (shifted[i].doc.text != first[i].doc.text) any_different = true;
    }
    CHECK(any_different);
}

TEST_CASE("generate_synthetic validates the spec") {
    SyntheticSpec spec;
    spec.n_docs = 0;
    spec.per_category[PhiCategory::Name] = 1;
    CHECK_THROWS_AS(generate_synthetic(spec), InvalidSpec);

    spec.n_docs = 1;
    spec.per_category.clear();
    CHECK_THROWS_AS(generate_synthetic(spec), InvalidSpec);

    spec.per_category[PhiCategory::Others] = 1;
    CHECK_THROWS_AS(generate_synthetic(spec), InvalidSpec);
}

TEST_CASE("full synthetic corpus passes the annotation oracle") {
    SyntheticSpec spec;
    spec.n_docs = 100;
    for (PhiCategory c : kConcreteCategories) spec.per_category[c] = 3;
    spec.seed = 42;

    auto docs = generate_synthetic(spec);
    REQUIRE(docs.size() == 100);
    std::size_t total_spans = 0;
    for (const AnnotatedDocument& d : docs) {
        auto violations = validate_annotations(d.doc, d.spans);
        CHECK(violations.empty());
        total_spans += d.spans.size();
    }
    CHECK(total_spans == 100 * 21);
}

TEST_CASE("manifest round trips docs and spans") {
    SyntheticSpec spec;
    spec.n_docs = 3;
    for (PhiCategory c : kConcreteCategories) spec.per_category[c] = 1;
    spec.seed = 5;
    auto docs = generate_synthetic(spec);

    std::ostringstream out;
    write_manifest(out, docs);
    std::istringstream in(out.str());
    auto loaded = read_manifest(in);
    REQUIRE(loaded.size() == docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        CHECK(loaded[i].doc.doc_id == docs[i].doc.doc_id);
        CHECK(loaded[i].doc.text == docs[i].doc.text);
        CHECK(loaded[i].spans == docs[i].spans);
    }

    std::ostringstream again;
    write_manifest(again, loaded);
    CHECK(again.str() == out.str());
}
