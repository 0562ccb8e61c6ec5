#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include <mtag/morphdict.hpp>

#include "support.hpp"

using namespace mtag;

namespace {

MorphDict dict_from(const std::string& text) {
    std::istringstream in(text);
    return MorphDict::read(in);
}

AbbrevTable table_from(const std::string& text) {
    std::istringstream in(text);
    return AbbrevTable::read(in);
}

const std::string kRokDict =
    "rok\trok\tsubst:sg:nom:m3\n"
    "roku\trok\tsubst:sg:gen:m3\n"
    "rokowi\trok\tsubst:sg:dat:m3\n"
    "rokiem\trok\tsubst:sg:inst:m3\n";

}  // namespace

TEST_CASE("load_morphdict indexes both directions") {
    const MorphDict dict = dict_from("roku\trok\tsubst:sg:gen:m3\n");
    const auto forms = dict.inflected_forms("rok");
    REQUIRE(forms.size() == 1);
    CHECK(forms[0].first == "subst:sg:gen:m3");
    CHECK(forms[0].second == "roku");
    CHECK(dict.contains("rok", "subst:sg:gen:m3"));
    CHECK_FALSE(dict.contains("rok", "subst:sg:nom:m3"));
}

TEST_CASE("empty and malformed dictionary input") {
    const MorphDict empty = dict_from("");
    CHECK(empty.entry_count() == 0);
    CHECK(empty.inflected_forms("rok").empty());

    std::istringstream malformed("roku\trok\n");
    CHECK_THROWS_AS(MorphDict::read(malformed), ParseError);
    std::istringstream bad_tag("roku\trok\t:x\n");
    try {
        MorphDict::read(bad_tag);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 1);
    }
    std::istringstream empty_field("\trok\tsubst\n");
    CHECK_THROWS_AS(MorphDict::read(empty_field), ParseError);
}

TEST_CASE("comments skipped, duplicate triples deduplicated") {
    const MorphDict dict = dict_from(
        "# a comment\n"
        "roku\trok\tsubst:sg:gen:m3\n"
        "roku\trok\tsubst:sg:gen:m3\n");
    CHECK(dict.entry_count() == 1);
}

TEST_CASE("inflected_forms sizes") {
    const MorphDict dict = dict_from(kRokDict + "dziś\tdziś\tadv\n");
    CHECK(dict.inflected_forms("rok").size() == 4);
    CHECK(dict.inflected_forms("nieznany").empty());
    CHECK(dict.inflected_forms("dziś").size() == 1);
}

TEST_CASE("expand resolves abbrev then form") {
    const MorphDict dict = dict_from(kRokDict);
    const AbbrevTable table = table_from("r\trok\tyear\n");
    const Expansion e = expand(dict, table, "r", parse_tag("subst:sg:gen:m3"));
    CHECK(e.form == "roku");
    CHECK_FALSE(e.ambiguous);
    CHECK_THROWS_AS(expand(dict, table, "xyz", parse_tag("subst:sg:gen:m3")), UnknownAbbrev);
    CHECK_THROWS_AS(expand(dict, table, "r", parse_tag("subst:pl:gen:m3")), NoSuchForm);
}

TEST_CASE("ambiguous forms resolve to the smallest and get flagged") {
    const MorphDict dict = dict_from(
        "zoku\trok\tsubst:sg:gen:m3\n"
        "aoku\trok\tsubst:sg:gen:m3\n");
    const AbbrevTable table = table_from("r\trok\n");
    const Expansion e = expand(dict, table, "r", parse_tag("subst:sg:gen:m3"));
    CHECK(e.form == "aoku");
    CHECK(e.ambiguous);
}

TEST_CASE("dictionary serialization is idempotent") {
    Rng rng(2024);
    std::ostringstream source;
    for (int i = 0; i < 300; ++i) {
        source << testsupport::random_segment(rng) << '\t' << testsupport::random_segment(rng)
               << '\t' << testsupport::random_tag(rng) << '\n';
    }
    const MorphDict first = dict_from(source.str());
    std::ostringstream serialized;
    first.write(serialized);
    const MorphDict second = dict_from(serialized.str());
    std::ostringstream reserialized;
    second.write(reserialized);
    CHECK(serialized.str() == reserialized.str());
    CHECK(first.entry_count() == second.entry_count());
}

TEST_CASE("expand agrees with inflected_forms and never fabricates") {
    Rng rng(77);
    std::ostringstream source;
    for (int i = 0; i < 200; ++i) {
        source << testsupport::random_segment(rng) << '\t' << "lex" << rng.below(20) << '\t'
               << testsupport::random_tag(rng) << '\n';
    }
    const MorphDict dict = dict_from(source.str());
    for (int lex = 0; lex < 20; ++lex) {
        const std::string lexeme = "lex" + std::to_string(lex);
        const AbbrevTable table = table_from("a\t" + lexeme + "\n");
        for (const auto& [tag, form] : dict.inflected_forms(lexeme)) {
            const Expansion e = expand(dict, table, "a", parse_tag(tag));
            const auto* forms = dict.forms(lexeme, tag);
            REQUIRE(forms != nullptr);
            // the chosen form exists in the dictionary, and is the smallest
            CHECK(std::find(forms->begin(), forms->end(), e.form) != forms->end());
            CHECK(e.form == forms->front());
            CHECK(e.ambiguous == (forms->size() > 1));
        }
    }
}

TEST_CASE("abbreviation table parsing") {
    const AbbrevTable table = table_from(
        "# abbreviations\n"
        "r\trok\tyear\n"
        "nr\tnumer\n");
    CHECK(table.size() == 2);
    REQUIRE(table.find_abbrev("r") != nullptr);
    CHECK(table.find_abbrev("r")->base_form == "rok");
    CHECK(table.find_abbrev("r")->note == "year");
    CHECK(table.find_abbrev("nr")->note.empty());
    CHECK(table.find_abbrev("zz") == nullptr);
    REQUIRE(table.find_base("numer") != nullptr);
    CHECK(table.find_base("numer")->abbrev == "nr");
    CHECK(table.find_base("brak") == nullptr);

    std::istringstream duplicate("r\trok\nr\trok\n");
    CHECK_THROWS_AS(AbbrevTable::read(duplicate), ParseError);
    std::istringstream arity("r\n");
    CHECK_THROWS_AS(AbbrevTable::read(arity), ParseError);
    std::istringstream empty_field("\trok\n");
    CHECK_THROWS_AS(AbbrevTable::read(empty_field), ParseError);
}
