#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mtag/morphdict.hpp"
#include "mtag/tag.hpp"

namespace mtag {

struct Token {
    std::string surface;
    std::string lexeme;
    Tag tag;

    bool operator==(const Token&) const = default;
};

struct Sentence {
    std::vector<Token> tokens;

    bool operator==(const Sentence&) const = default;
};

enum class Strictness { strict, lenient };

struct ReadReport {
    std::size_t malformed_lines = 0;
};

// Vertical corpus format: surface<TAB>lexeme<TAB>tag per line, one blank line
// between sentences, '#' comments, trailing blank optional. Strict mode
// throws ParseError with the line number; lenient mode skips bad lines and
// counts them in the report.
std::vector<Sentence> read_corpus(std::istream& in, Strictness strictness,
                                  ReadReport* report = nullptr);
void write_corpus(std::ostream& out, const std::vector<Sentence>& sentences);

// One supervised example: the sentence's tag sequence as input-vocabulary
// indices with the target token masked out.
struct TrainingExample {
    std::vector<std::size_t> input_indices;  // mask index at exactly one slot
    std::size_t mask_position = 0;
    std::size_t target_index = 0;  // output-vocabulary index of the true tag
    std::string abbrev_id;         // abbreviation key of the matched entry
};

struct GenReport {
    std::size_t sentences = 0;
    std::size_t long_sentences = 0;            // skipped: over max_len tokens
    std::size_t unknown_input_tag_sentences = 0;   // skipped: tag not in input vocab
    std::size_t unknown_target_tag_sentences = 0;  // skipped: label not in output vocab
    std::size_t examples = 0;

    std::size_t skipped() const {
        return long_sentences + unknown_input_tag_sentences + unknown_target_tag_sentences;
    }
};

// Emits one example per dictionary-confirmed match: a token whose lexeme is
// some abbreviation's base form and whose (lexeme, tag) pair the dictionary
// knows. A sentence with several matches is replicated with a different
// token masked each time. Sentences over max_len tokens, or containing any
// tag missing from the vocabularies, are skipped and counted.
std::vector<TrainingExample> generate_examples(const std::vector<Sentence>& sentences,
                                               const AbbrevTable& table, const MorphDict& dict,
                                               const TagVocab& input_vocab,
                                               const TagVocab& output_vocab, std::size_t max_len,
                                               GenReport* report = nullptr);

// Tag multisets for vocabulary construction, collected from the sentences
// that example generation would keep: input counts cover every token of an
// eligible sentence, output counts cover the matched tokens' tags.
struct TagCounts {
    std::map<std::string, std::size_t> input;
    std::map<std::string, std::size_t> output;
};
TagCounts collect_tag_counts(const std::vector<Sentence>& sentences, const AbbrevTable& table,
                             const MorphDict& dict, std::size_t max_len);

// Seeded shuffle, then the first round(fraction * size) examples become the
// validation half. Requires 0 < fraction < 1 and a non-empty input.
std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>> split_train_validation(
    std::vector<TrainingExample> examples, double validation_fraction, std::uint64_t seed);

}  // namespace mtag
