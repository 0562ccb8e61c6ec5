#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mtag/corpus.hpp"
#include "mtag/tag.hpp"

namespace mtag {

// Synthetic inflected language with deterministic agreement: determiners and
// adjectives copy number/case/gender from their noun, verbs copy number.
// Every noun slot's tag is therefore uniquely recoverable from the rest of
// the sentence, which makes generated corpora an exact oracle for the
// pipeline.
struct NounLexeme {
    std::string lexeme;
    std::string gender;  // fixed per lexeme
};

struct FixedWord {
    std::string name;  // doubles as surface and lexeme
    std::string tag;
};

struct Slot {
    enum class Kind { det, adj, noun, verb, word };
    Kind kind = Kind::word;
    std::size_t group = 0;  // agreement group for det/adj/noun/verb
    std::string word;       // FixedWord name for Kind::word
};

struct SentenceTemplate {
    std::vector<Slot> slots;
};

struct GrammarSpec {
    std::vector<std::string> numbers;
    std::vector<std::string> cases;
    std::vector<std::string> genders;
    std::vector<NounLexeme> nouns;
    std::vector<std::pair<std::string, std::string>> abbrevs;  // abbrev -> lexeme
    std::vector<FixedWord> words;
    std::vector<SentenceTemplate> templates;
    std::uint64_t seed = 1;

    // 2 numbers x 4 cases x 2 genders, 12 nouns (4 abbreviatable), 6
    // templates of 5-10 tokens.
    static GrammarSpec default_spec();

    // Line format: key=value with repeated keys; see the repository docs.
    static GrammarSpec read(std::istream& in);

    // InvalidSpec when an agreement rule would admit two consistent noun
    // tags (a noun group without det/adj coverage, colliding templates) or
    // any reference dangles.
    void validate() const;

    const NounLexeme* find_noun(std::string_view lexeme) const;
    bool abbrevable(std::string_view lexeme) const;

    // Expected most-frequent-tag baseline accuracy under uniform
    // number/case sampling: 1 / (|numbers| * |cases|).
    double baseline_expectation() const;
};

// Inflection is by suffixing, so every (lexeme, number, case) surface is
// distinct and dictionary lookups are unambiguous.
std::string noun_surface(std::string_view lexeme, std::string_view number, std::string_view case_);

struct SynthCorpus {
    std::vector<Sentence> sentences;
    std::string morphdict_source;     // form<TAB>lemma<TAB>tag lines, full tables
    std::string abbrev_table_source;  // abbrev<TAB>base_form lines
};

// Deterministic in spec.seed. The emitted dictionary covers every noun's
// full number x case table whether or not a form was sampled.
SynthCorpus generate_corpus(const GrammarSpec& spec, std::size_t n_sentences);

// Recovers the tag at `position` purely from the other tokens' tags: every
// template is matched against the sentence with the queried slot treated as
// unknown, agreement forces the group's number/case/gender, and exactly one
// surviving tag is required. Throws NotAbbreviatable when the position does
// not hold an abbreviatable noun and AmbiguousContext when zero or several
// tags survive.
Tag oracle_tag(const GrammarSpec& spec, const Sentence& sentence, std::size_t position);

// Attribute schema whose number/case/gender sets come from the grammar.
AttributeSchema schema_for(const GrammarSpec& spec);

}  // namespace mtag
