#include <doctest.h>

#include <set>

#include "deid/errors.hpp"
#include "deid/hipaa.hpp"

using namespace deid;

TEST_CASE("the identifier table is the canonical 18-entry list") {
    const auto& table = hipaa_identifiers();
    REQUIRE(table.size() == 18);
    std::set<int> indices;
    for (const HipaaIdentifier& identifier : table) {
        CHECK(!identifier.label.empty());
        indices.insert(identifier.index);
    }
    CHECK(indices.size() == 18);
    CHECK(*indices.begin() == 1);
    CHECK(*indices.rbegin() == 18);
    CHECK(table[0].label == "Names");
    CHECK(table[3].label == "Phone numbers");
    CHECK(table[5].label == "Email addresses");
}

TEST_CASE("lexical_similarity identity and disjoint anchors") {
    CHECK(lexical_similarity("Names", "Names") == doctest::Approx(1.0));
    CHECK(lexical_similarity("NAMES", "names") == doctest::Approx(1.0));  // normalized identity
    CHECK(lexical_similarity("xyz", "qqq") == doctest::Approx(0.0));
    CHECK(lexical_similarity("", "") == doctest::Approx(1.0));
    CHECK(lexical_similarity("", "anything") == doctest::Approx(0.0));
}

TEST_CASE("lexical_similarity matches the hand-computed golden value") {
    // hand calculation: token sets {phone,numbers} vs {contact,phone,number}
    // give Jaccard 1/4; the 11 distinct trigrams of "phone numbers" share 10
    // with the 18 of "contact phone number", giving 10/19; mean = 59/152
    double expected = 59.0 / 152.0;
    CHECK(lexical_similarity("Phone numbers", "contact phone number") ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(lexical_similarity("contact phone number", "Phone numbers") ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("similarity is symmetric and bounded over the working vocabulary") {
    const auto& table = hipaa_identifiers();
    for (const HipaaIdentifier& a : table) {
        for (const CategoryGloss& g : default_category_glosses()) {
            double forward = lexical_similarity(a.label, g.gloss);
            double backward = lexical_similarity(g.gloss, a.label);
            CHECK(forward == doctest::Approx(backward));
            CHECK(forward >= 0.0);
            CHECK(forward <= 1.0);
        }
    }
}

TEST_CASE("map_identifiers assigns every identifier exactly once") {
    auto mappings = map_identifiers();
    REQUIRE(mappings.size() == 18);
    std::set<int> seen;
    for (const CategoryMapping& m : mappings) {
        CHECK(seen.insert(m.identifier.index).second);
        // sink rule: OTHERS iff the best score missed the threshold
        if (m.category == PhiCategory::Others) {
            CHECK(m.score < m.threshold);
        } else {
            CHECK(m.score >= m.threshold);
        }
    }
}

TEST_CASE("argmax voting with the default scorer lands the pinned fixtures") {
    auto mappings = map_identifiers();
    auto category_of = [&](int index) {
        for (const CategoryMapping& m : mappings) {
            if (m.identifier.index == index) return m.category;
        }
        return PhiCategory::Others;
    };
    CHECK(category_of(1) == PhiCategory::Name);      // Names
    CHECK(category_of(4) == PhiCategory::Contact);   // Phone numbers
    CHECK(category_of(6) == PhiCategory::Contact);   // Email addresses
}

TEST_CASE("zero scorer with positive threshold sends everything to OTHERS") {
    const auto& glosses = default_category_glosses();
    auto mappings = map_identifiers(
        std::span(hipaa_identifiers()), std::span(glosses.data(), glosses.size()),
        [](std::string_view, std::string_view) { return 0.0; }, 0.1);
    REQUIRE(mappings.size() == 18);
    for (const CategoryMapping& m : mappings) {
        CHECK(m.category == PhiCategory::Others);
        CHECK(m.score == doctest::Approx(0.0));
    }
}

TEST_CASE("invalid thresholds are rejected") {
    CHECK_THROWS_AS(map_identifiers(1.01), InvalidThreshold);
    CHECK_THROWS_AS(map_identifiers(-0.5), InvalidThreshold);
    CHECK_NOTHROW(map_identifiers(1.0));
    CHECK_NOTHROW(map_identifiers(0.0));
}

TEST_CASE("raising the threshold never rescues an identifier from OTHERS") {
    auto low = map_identifiers(0.1);
    auto high = map_identifiers(0.6);
    REQUIRE(low.size() == high.size());
    for (std::size_t i = 0; i < low.size(); ++i) {
        if (low[i].category == PhiCategory::Others) {
            CHECK(high[i].category == PhiCategory::Others);
        }
    }
}

TEST_CASE("mapping is a pure function of its inputs") {
    auto first = map_identifiers(0.2);
    auto second = map_identifiers(0.2);
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].category == second[i].category);
        CHECK(first[i].score == doctest::Approx(second[i].score));
    }
}

TEST_CASE("mapping table exports as a json array") {
    auto mappings = map_identifiers();
    std::string json = mapping_table_json(mappings);
    CHECK(json.find("\"index\": 1") != std::string::npos);
    CHECK(json.find("\"label\": \"Names\"") != std::string::npos);
    CHECK(json.find("\"category\"") != std::string::npos);
    CHECK(json.find("\"threshold\"") != std::string::npos);
}
