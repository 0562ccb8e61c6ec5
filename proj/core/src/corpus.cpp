#include "mtag/corpus.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "mtag/errors.hpp"
#include "mtag/rng.hpp"

namespace mtag {

namespace {

// Parses one token line. Throws ParseError in strict mode; returns false in
// lenient mode.
bool parse_token_line(const std::string& line, std::size_t line_no, Strictness strictness,
                      Token& out) {
    auto fail = [&](const std::string& what) -> bool {
        if (strictness == Strictness::strict) {
            throw ParseError(what, line_no);
        }
        return false;
    };
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    if (fields.size() != 3) {
        return fail("expected surface<TAB>lexeme<TAB>tag, got " + std::to_string(fields.size()) +
                    " fields");
    }
    if (fields[0].empty() || fields[1].empty()) {
        return fail("empty surface or lexeme field");
    }
    Tag tag;
    try {
        tag = parse_tag(fields[2]);
    } catch (const Error& e) {
        return fail(std::string("bad tag: ") + e.what());
    }
    out.surface = std::move(fields[0]);
    out.lexeme = std::move(fields[1]);
    out.tag = std::move(tag);
    return true;
}

}  // namespace

std::vector<Sentence> read_corpus(std::istream& in, Strictness strictness, ReadReport* report) {
    std::vector<Sentence> sentences;
    Sentence current;
    std::string line;
    std::size_t line_no = 0;
    ReadReport local;

    auto flush = [&] {
        if (!current.tokens.empty()) {
            sentences.push_back(std::move(current));
            current = Sentence{};
        }
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            flush();
            continue;
        }
        if (line.front() == '#') {
            continue;
        }
        Token token;
        if (parse_token_line(line, line_no, strictness, token)) {
            current.tokens.push_back(std::move(token));
        } else {
            ++local.malformed_lines;
        }
    }
    if (in.bad()) {
        throw IoError("stream failure while reading corpus");
    }
    flush();
    if (report != nullptr) {
        *report = local;
    }
    return sentences;
}

void write_corpus(std::ostream& out, const std::vector<Sentence>& sentences) {
    auto check_field = [](const std::string& field) {
        if (field.empty() || field.find('\t') != std::string::npos ||
            field.find('\n') != std::string::npos) {
            throw Error("token field '" + field + "' is not representable in the vertical format");
        }
    };
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (i > 0) {
            out << '\n';
        }
        for (const auto& token : sentences[i].tokens) {
            check_field(token.surface);
            check_field(token.lexeme);
            if (token.surface.front() == '#') {
                throw Error("surface '" + token.surface + "' would read back as a comment");
            }
            out << token.surface << '\t' << token.lexeme << '\t' << format_tag(token.tag) << '\n';
        }
    }
}

namespace {

// A token is a match when its lexeme is some abbreviation's base form and
// the dictionary confirms the (lexeme, tag) pair.
const AbbrevEntry* match_token(const Token& token, const AbbrevTable& table,
                               const MorphDict& dict) {
    const AbbrevEntry* entry = table.find_base(token.lexeme);
    if (entry == nullptr) {
        return nullptr;
    }
    if (!dict.contains(token.lexeme, format_tag(token.tag))) {
        return nullptr;
    }
    return entry;
}

}  // namespace

std::vector<TrainingExample> generate_examples(const std::vector<Sentence>& sentences,
                                               const AbbrevTable& table, const MorphDict& dict,
                                               const TagVocab& input_vocab,
                                               const TagVocab& output_vocab, std::size_t max_len,
                                               GenReport* report) {
    std::vector<TrainingExample> examples;
    GenReport local;
    const std::size_t mask_index = input_vocab.mask_index();

    for (const auto& sentence : sentences) {
        ++local.sentences;
        if (sentence.tokens.empty()) {
            continue;
        }
        if (sentence.tokens.size() > max_len) {
            ++local.long_sentences;
            continue;
        }

        std::vector<std::size_t> indices;
        indices.reserve(sentence.tokens.size());
        bool unknown_input = false;
        for (const auto& token : sentence.tokens) {
            const std::string tag = format_tag(token.tag);
            // A literal mask tag in the corpus would break the one-mask
            // invariant, so it is treated as unknown.
            std::optional<std::size_t> idx;
            if (tag != kMaskToken) {
                idx = input_vocab.find(tag);
            }
            if (!idx) {
                unknown_input = true;
                break;
            }
            indices.push_back(*idx);
        }
        if (unknown_input) {
            ++local.unknown_input_tag_sentences;
            continue;
        }

        struct Match {
            std::size_t position;
            std::size_t target;
            const AbbrevEntry* entry;
        };
        std::vector<Match> matches;
        bool unknown_target = false;
        for (std::size_t pos = 0; pos < sentence.tokens.size(); ++pos) {
            const AbbrevEntry* entry = match_token(sentence.tokens[pos], table, dict);
            if (entry == nullptr) {
                continue;
            }
            auto target = output_vocab.find(format_tag(sentence.tokens[pos].tag));
            if (!target) {
                unknown_target = true;
                break;
            }
            matches.push_back(Match{pos, *target, entry});
        }
        if (unknown_target) {
            ++local.unknown_target_tag_sentences;
            continue;
        }

        for (const auto& match : matches) {
            TrainingExample example;
            example.input_indices = indices;
            example.input_indices[match.position] = mask_index;
            example.mask_position = match.position;
            example.target_index = match.target;
            example.abbrev_id = match.entry->abbrev;
            examples.push_back(std::move(example));
        }
        local.examples += matches.size();
    }

    if (report != nullptr) {
        *report = local;
    }
    return examples;
}

TagCounts collect_tag_counts(const std::vector<Sentence>& sentences, const AbbrevTable& table,
                             const MorphDict& dict, std::size_t max_len) {
    TagCounts counts;
    for (const auto& sentence : sentences) {
        if (sentence.tokens.empty() || sentence.tokens.size() > max_len) {
            continue;
        }
        bool any_match = false;
        bool mask_collision = false;
        for (const auto& token : sentence.tokens) {
            if (format_tag(token.tag) == kMaskToken) {
                mask_collision = true;
                break;
            }
            if (match_token(token, table, dict) != nullptr) {
                any_match = true;
            }
        }
        if (mask_collision || !any_match) {
            continue;
        }
        for (const auto& token : sentence.tokens) {
            const std::string tag = format_tag(token.tag);
            ++counts.input[tag];
            if (match_token(token, table, dict) != nullptr) {
                ++counts.output[tag];
            }
        }
    }
    return counts;
}

std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>> split_train_validation(
    std::vector<TrainingExample> examples, double validation_fraction, std::uint64_t seed) {
    if (examples.empty()) {
        throw EmptySet("nothing to split");
    }
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw Error("validation fraction must lie in (0, 1)");
    }
    Rng rng(seed);
    rng.shuffle(examples);

    const auto n_valid = static_cast<std::size_t>(
        std::llround(validation_fraction * static_cast<double>(examples.size())));
    std::vector<TrainingExample> validation(examples.begin(),
                                            examples.begin() + static_cast<std::ptrdiff_t>(n_valid));
    std::vector<TrainingExample> train(examples.begin() + static_cast<std::ptrdiff_t>(n_valid),
                                       examples.end());
    return {std::move(train), std::move(validation)};
}

}  // namespace mtag
