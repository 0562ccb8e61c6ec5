#include "mtag/tag.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

#include "mtag/hash.hpp"

namespace mtag {

namespace {

bool has_whitespace(std::string_view s) {
    return std::any_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

Tag parse_tag(std::string_view s) {
    if (s.empty()) {
        throw EmptyTag("empty tag string");
    }
    Tag tag;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(':', start);
        std::string_view segment =
            (pos == std::string_view::npos) ? s.substr(start) : s.substr(start, pos - start);
        if (segment.empty()) {
            throw MalformedTag("empty segment in tag '" + std::string(s) + "'");
        }
        if (has_whitespace(segment)) {
            throw MalformedTag("whitespace in tag '" + std::string(s) + "'");
        }
        if (tag.grammatical_class.empty() && start == 0) {
            tag.grammatical_class.assign(segment);
        } else {
            tag.attributes.emplace_back(segment);
        }
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return tag;
}

std::string format_tag(const Tag& t) {
    std::string out = t.grammatical_class;
    for (const auto& a : t.attributes) {
        out += ':';
        out += a;
    }
    return out;
}

TagVocab TagVocab::build(const std::map<std::string, std::size_t>& tag_counts, VocabKind kind) {
    if (tag_counts.empty()) {
        throw EmptyTagSet("cannot build a vocabulary from an empty tag multiset");
    }
    std::vector<std::pair<std::string, std::size_t>> order;
    order.reserve(tag_counts.size());
    for (const auto& [tag, count] : tag_counts) {
        if (tag == kMaskToken) {
            if (kind == VocabKind::output) {
                throw MalformedTag("mask token is not a valid output tag");
            }
            continue;  // the mask gets its reserved slot below
        }
        order.emplace_back(tag, count);
    }
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    TagVocab v;
    v.kind_ = kind;
    if (kind == VocabKind::input) {
        v.entries_.emplace_back(kMaskToken);
    }
    for (auto& [tag, count] : order) {
        v.entries_.push_back(std::move(tag));
    }
    if (v.entries_.empty()) {
        throw EmptyTagSet("tag multiset held nothing but the mask token");
    }
    for (std::size_t i = 0; i < v.entries_.size(); ++i) {
        v.index_.emplace(v.entries_[i], i);
    }
    return v;
}

TagVocab TagVocab::read(std::istream& in, VocabKind kind) {
    TagVocab v;
    v.kind_ = kind;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            throw ParseError("empty vocabulary line", line_no);
        }
        if (line == kMaskToken) {
            if (kind == VocabKind::output) {
                throw ParseError("mask token in an output vocabulary", line_no);
            }
            if (line_no != 1) {
                throw ParseError("mask token must sit on line 1", line_no);
            }
        } else {
            try {
                parse_tag(line);
            } catch (const Error& e) {
                throw ParseError(std::string("bad vocabulary entry: ") + e.what(), line_no);
            }
        }
        if (!v.index_.emplace(line, v.entries_.size()).second) {
            throw ParseError("duplicate vocabulary entry '" + line + "'", line_no);
        }
        v.entries_.push_back(line);
    }
    if (v.entries_.empty()) {
        throw EmptyTagSet("empty vocabulary file");
    }
    if (kind == VocabKind::input && v.entries_.front() != kMaskToken) {
        throw ParseError("input vocabulary must start with the mask token", 1);
    }
    return v;
}

void TagVocab::write(std::ostream& out) const {
    for (const auto& tag : entries_) {
        out << tag << '\n';
    }
}

std::size_t TagVocab::mask_index() const {
    if (kind_ != VocabKind::input) {
        throw Error("output vocabularies have no mask token");
    }
    return 0;
}

std::optional<std::size_t> TagVocab::find(std::string_view tag) const {
    auto it = index_.find(std::string(tag));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t TagVocab::encode(std::string_view tag) const {
    auto idx = find(tag);
    if (!idx) {
        throw UnknownTag("unknown tag '" + std::string(tag) + "'");
    }
    return *idx;
}

const std::string& TagVocab::decode(std::size_t index) const {
    if (index >= entries_.size()) {
        throw IndexOutOfVocab("index " + std::to_string(index) + " out of vocabulary of size " +
                              std::to_string(entries_.size()));
    }
    return entries_[index];
}

std::uint64_t TagVocab::fingerprint() const {
    Fnv1a64 h;
    for (const auto& tag : entries_) {
        h.update(tag);
        h.update("\n", 1);
    }
    return h.value;
}

AttributeSchema AttributeSchema::polish_default() {
    AttributeSchema s;
    s.sets_["number"] = {"sg", "pl"};
    s.sets_["case"] = {"nom", "gen", "dat", "acc", "inst", "loc", "voc"};
    s.sets_["gender"] = {"m1", "m2", "m3", "f", "n"};
    return s;
}

AttributeSchema AttributeSchema::read(std::istream& in) {
    AttributeSchema s;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ParseError("expected attribute=value1,value2,...", line_no);
        }
        std::string attribute = line.substr(0, eq);
        std::vector<std::string> values;
        std::size_t start = eq + 1;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            std::string value = (comma == std::string::npos)
                                    ? line.substr(start)
                                    : line.substr(start, comma - start);
            if (value.empty()) {
                throw ParseError("empty value in attribute '" + attribute + "'", line_no);
            }
            values.push_back(std::move(value));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        if (values.empty()) {
            throw ParseError("attribute '" + attribute + "' has no values", line_no);
        }
        if (!s.sets_.emplace(std::move(attribute), std::move(values)).second) {
            throw ParseError("duplicate attribute", line_no);
        }
    }
    return s;
}

std::optional<std::string> AttributeSchema::value_of(const Tag& t, std::string_view attribute) const {
    auto it = sets_.find(std::string(attribute));
    if (it == sets_.end()) {
        return std::nullopt;
    }
    const auto& values = it->second;
    for (const auto& segment : t.attributes) {
        if (std::find(values.begin(), values.end(), segment) != values.end()) {
            return segment;
        }
    }
    return std::nullopt;
}

bool AttributeSchema::has_attribute(std::string_view attribute) const {
    return sets_.count(std::string(attribute)) != 0;
}

std::optional<std::string> tag_attribute(const Tag& t, std::string_view attribute,
                                         const AttributeSchema& schema) {
    return schema.value_of(t, attribute);
}

}  // namespace mtag
