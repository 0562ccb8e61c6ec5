#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtag/tag.hpp"

namespace mtag {

// One abbreviation: the period-free key and the base form it expands to.
struct AbbrevEntry {
    std::string abbrev;
    std::string base_form;
    std::string note;  // optional gloss, documentation only
};

// File format: abbrev<TAB>base_form[<TAB>note], UTF-8, '#' comments.
class AbbrevTable {
public:
    static AbbrevTable read(std::istream& in);

    const AbbrevEntry* find_abbrev(std::string_view abbrev) const;
    // First table entry whose base form matches, or nullptr.
    const AbbrevEntry* find_base(std::string_view lexeme) const;

    const std::vector<AbbrevEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<AbbrevEntry> entries_;
    std::map<std::string, std::size_t, std::less<>> by_abbrev_;
    std::map<std::string, std::size_t, std::less<>> by_base_;
};

// (lexeme, tag) -> inflected surface forms, indexed both directions.
// File format: form<TAB>lemma<TAB>tag, UTF-8, '#' comments.
// Immutable after load, safe for concurrent readers.
class MorphDict {
public:
    static MorphDict read(std::istream& in);
    void write(std::ostream& out) const;

    // Every (tag, surface form) pair known for the lexeme, sorted; empty when
    // the lexeme is absent.
    std::vector<std::pair<std::string, std::string>> inflected_forms(std::string_view lexeme) const;

    // Surface forms for an exact (lexeme, tag) pair, sorted; nullptr when absent.
    const std::vector<std::string>* forms(std::string_view lexeme, std::string_view tag) const;

    bool contains(std::string_view lexeme, std::string_view tag) const;
    bool has_lexeme(std::string_view lexeme) const;
    std::size_t entry_count() const;

private:
    // lexeme -> tag -> sorted unique forms
    std::map<std::string, std::map<std::string, std::vector<std::string>>, std::less<>> entries_;
};

struct Expansion {
    std::string form;
    bool ambiguous = false;  // several forms shared the tag; smallest returned
};

// abbrev -> base form via the table, then (base form, tag) -> surface form.
// Throws UnknownAbbrev / NoSuchForm. The abbrev key is expected period-free.
Expansion expand(const MorphDict& dict, const AbbrevTable& table, std::string_view abbrev,
                 const Tag& predicted);

}  // namespace mtag
