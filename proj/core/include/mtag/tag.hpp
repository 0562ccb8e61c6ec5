#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mtag/errors.hpp"

namespace mtag {

// Reserved input symbol standing in for the tag to be inferred. Pinned to
// index 0 of every input vocabulary.
inline constexpr std::string_view kMaskToken = "<MASK>";

// A morphosyntactic tag: grammatical class plus attribute segments, written
// as colon-separated text (e.g. "subst:sg:gen:m3").
struct Tag {
    std::string grammatical_class;
    std::vector<std::string> attributes;

    bool operator==(const Tag&) const = default;
};

// Splits on ':'. Throws EmptyTag on empty input, MalformedTag when a segment
// is empty or contains whitespace.
Tag parse_tag(std::string_view s);

// Exact inverse of parse_tag.
std::string format_tag(const Tag& t);

enum class VocabKind { input, output };

// Dense bijective tag-string <-> index table. Input-kind vocabularies carry
// the mask token at index 0; output-kind ones have no mask at all.
// Immutable after construction, safe to share across concurrent readers.
class TagVocab {
public:
    // Orders entries by descending count, ties lexicographically. The mask
    // token is prepended for input vocabularies; it must not appear in the
    // counts of an output vocabulary.
    static TagVocab build(const std::map<std::string, std::size_t>& tag_counts, VocabKind kind);

    // One tag per line, index order. Input files must carry the mask on line 0.
    static TagVocab read(std::istream& in, VocabKind kind);
    void write(std::ostream& out) const;

    std::size_t size() const { return entries_.size(); }
    VocabKind kind() const { return kind_; }

    // Valid for input vocabularies only.
    std::size_t mask_index() const;

    std::optional<std::size_t> find(std::string_view tag) const;
    std::size_t encode(std::string_view tag) const;  // UnknownTag on miss
    const std::string& decode(std::size_t index) const;  // IndexOutOfVocab

    // FNV-1a over the entry list; stored in model containers so a model can
    // detect being run against the wrong vocabulary.
    std::uint64_t fingerprint() const;

    const std::vector<std::string>& entries() const { return entries_; }

private:
    VocabKind kind_ = VocabKind::input;
    std::vector<std::string> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Closed attribute value sets used to pull number/case/gender out of a tag.
// The default covers NKJP-style Polish tags; schema files let synthetic
// tagsets define their own sets.
class AttributeSchema {
public:
    static AttributeSchema polish_default();

    // Line format: attribute=value1,value2,...  '#' starts a comment.
    static AttributeSchema read(std::istream& in);

    // First tag segment that belongs to the attribute's value set, or nullopt.
    std::optional<std::string> value_of(const Tag& t, std::string_view attribute) const;

    bool has_attribute(std::string_view attribute) const;
    const std::map<std::string, std::vector<std::string>>& attributes() const { return sets_; }

private:
    std::map<std::string, std::vector<std::string>> sets_;
};

// Schema lookup per the eval error taxonomy: "number", "case" or "gender".
std::optional<std::string> tag_attribute(const Tag& t, std::string_view attribute,
                                         const AttributeSchema& schema);

}  // namespace mtag
