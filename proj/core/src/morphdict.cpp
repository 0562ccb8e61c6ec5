#include "mtag/morphdict.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "mtag/errors.hpp"

namespace mtag {

namespace {

// Splits a data line on tabs. Returns false for blank and comment lines.
bool split_fields(const std::string& line, std::vector<std::string>& fields) {
    fields.clear();
    if (line.empty() || line.front() == '#') {
        return false;
    }
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
    return true;
}

std::string chomp(std::string line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return line;
}

}  // namespace

AbbrevTable AbbrevTable::read(std::istream& in) {
    AbbrevTable table;
    std::string line;
    std::vector<std::string> fields;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = chomp(std::move(line));
        if (!split_fields(line, fields)) {
            continue;
        }
        if (fields.size() < 2 || fields.size() > 3) {
            throw ParseError("expected abbrev<TAB>base_form[<TAB>note]", line_no);
        }
        if (fields[0].empty() || fields[1].empty()) {
            throw ParseError("empty abbreviation or base form", line_no);
        }
        AbbrevEntry entry{fields[0], fields[1], fields.size() == 3 ? fields[2] : std::string()};
        if (!table.by_abbrev_.emplace(entry.abbrev, table.entries_.size()).second) {
            throw ParseError("duplicate abbreviation '" + entry.abbrev + "'", line_no);
        }
        table.by_base_.emplace(entry.base_form, table.entries_.size());  // first wins
        table.entries_.push_back(std::move(entry));
    }
    return table;
}

const AbbrevEntry* AbbrevTable::find_abbrev(std::string_view abbrev) const {
    auto it = by_abbrev_.find(abbrev);
    return it == by_abbrev_.end() ? nullptr : &entries_[it->second];
}

const AbbrevEntry* AbbrevTable::find_base(std::string_view lexeme) const {
    auto it = by_base_.find(lexeme);
    return it == by_base_.end() ? nullptr : &entries_[it->second];
}

MorphDict MorphDict::read(std::istream& in) {
    MorphDict dict;
    std::string line;
    std::vector<std::string> fields;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = chomp(std::move(line));
        if (!split_fields(line, fields)) {
            continue;
        }
        if (fields.size() != 3) {
            throw ParseError("expected form<TAB>lemma<TAB>tag", line_no);
        }
        if (fields[0].empty() || fields[1].empty()) {
            throw ParseError("empty form or lemma", line_no);
        }
        try {
            parse_tag(fields[2]);
        } catch (const Error& e) {
            throw ParseError(std::string("bad tag: ") + e.what(), line_no);
        }
        auto& forms = dict.entries_[fields[1]][fields[2]];
        if (std::find(forms.begin(), forms.end(), fields[0]) == forms.end()) {
            forms.push_back(fields[0]);
        }
    }
    for (auto& [lexeme, tags] : dict.entries_) {
        for (auto& [tag, forms] : tags) {
            std::sort(forms.begin(), forms.end());
        }
    }
    return dict;
}

void MorphDict::write(std::ostream& out) const {
    for (const auto& [lexeme, tags] : entries_) {
        for (const auto& [tag, forms] : tags) {
            for (const auto& form : forms) {
                out << form << '\t' << lexeme << '\t' << tag << '\n';
            }
        }
    }
}

std::vector<std::pair<std::string, std::string>> MorphDict::inflected_forms(
    std::string_view lexeme) const {
    std::vector<std::pair<std::string, std::string>> out;
    auto it = entries_.find(lexeme);
    if (it == entries_.end()) {
        return out;
    }
    for (const auto& [tag, forms] : it->second) {
        for (const auto& form : forms) {
            out.emplace_back(tag, form);
        }
    }
    return out;
}

const std::vector<std::string>* MorphDict::forms(std::string_view lexeme,
                                                 std::string_view tag) const {
    auto it = entries_.find(lexeme);
    if (it == entries_.end()) {
        return nullptr;
    }
    auto jt = it->second.find(std::string(tag));
    return jt == it->second.end() ? nullptr : &jt->second;
}

bool MorphDict::contains(std::string_view lexeme, std::string_view tag) const {
    return forms(lexeme, tag) != nullptr;
}

bool MorphDict::has_lexeme(std::string_view lexeme) const {
    return entries_.find(lexeme) != entries_.end();
}

std::size_t MorphDict::entry_count() const {
    std::size_t n = 0;
    for (const auto& [lexeme, tags] : entries_) {
        for (const auto& [tag, forms] : tags) {
            n += forms.size();
        }
    }
    return n;
}

Expansion expand(const MorphDict& dict, const AbbrevTable& table, std::string_view abbrev,
                 const Tag& predicted) {
    const AbbrevEntry* entry = table.find_abbrev(abbrev);
    if (entry == nullptr) {
        throw UnknownAbbrev("abbreviation '" + std::string(abbrev) + "' is not in the table");
    }
    const std::string tag = format_tag(predicted);
    const std::vector<std::string>* forms = dict.forms(entry->base_form, tag);
    if (forms == nullptr || forms->empty()) {
        throw NoSuchForm("no form of '" + entry->base_form + "' with tag '" + tag + "'");
    }
    return Expansion{forms->front(), forms->size() > 1};
}

}  // namespace mtag
