#include "mtag/synth.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "mtag/errors.hpp"
#include "mtag/rng.hpp"

namespace mtag {

namespace {

// Tag classes with agreement semantics; fixed filler words must stay out of
// them so the oracle can tell structure from filler.
constexpr std::string_view kNounClass = "subst";
constexpr std::string_view kDetClass = "det";
constexpr std::string_view kAdjClass = "adj";
constexpr std::string_view kVerbClass = "fin";

bool valid_segment(std::string_view s) {
    if (s.empty()) {
        return false;
    }
    for (char c : s) {
        if (c == ':' || c == ' ' || c == '\t') {
            return false;
        }
    }
    return true;
}

bool contains(const std::vector<std::string>& values, std::string_view v) {
    return std::find(values.begin(), values.end(), v) != values.end();
}

std::string slot_class(const Slot& slot, const GrammarSpec& spec) {
    switch (slot.kind) {
        case Slot::Kind::det:
            return std::string(kDetClass);
        case Slot::Kind::adj:
            return std::string(kAdjClass);
        case Slot::Kind::noun:
            return std::string(kNounClass);
        case Slot::Kind::verb:
            return std::string(kVerbClass);
        case Slot::Kind::word:
            for (const auto& w : spec.words) {
                if (w.name == slot.word) {
                    return parse_tag(w.tag).grammatical_class;
                }
            }
            throw InvalidSpec("template references undefined word '" + slot.word + "'");
    }
    throw InvalidSpec("bad slot kind");
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> parts;
    std::istringstream in(s);
    std::string part;
    while (in >> part) {
        parts.push_back(part);
    }
    return parts;
}

std::vector<std::string> split_commas(const std::string& s, std::size_t line_no) {
    std::vector<std::string> values;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t comma = s.find(',', start);
        std::string v = comma == std::string::npos ? s.substr(start) : s.substr(start, comma - start);
        if (v.empty()) {
            throw ParseError("empty list element", line_no);
        }
        values.push_back(std::move(v));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return values;
}

Slot parse_slot(const std::string& text, std::size_t line_no) {
    const std::size_t colon = text.find(':');
    const std::string head = colon == std::string::npos ? text : text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? std::string() : text.substr(colon + 1);
    Slot slot;
    if (head == "det" || head == "adj" || head == "noun" || head == "verb") {
        if (rest.empty()) {
            throw ParseError("slot '" + text + "' needs an agreement group", line_no);
        }
        try {
            slot.group = static_cast<std::size_t>(std::stoul(rest));
        } catch (const std::exception&) {
            throw ParseError("bad agreement group in '" + text + "'", line_no);
        }
        slot.kind = head == "det"    ? Slot::Kind::det
                    : head == "adj"  ? Slot::Kind::adj
                    : head == "noun" ? Slot::Kind::noun
                                     : Slot::Kind::verb;
    } else if (head == "word") {
        if (rest.empty()) {
            throw ParseError("word slot needs a name", line_no);
        }
        slot.kind = Slot::Kind::word;
        slot.word = rest;
    } else {
        throw ParseError("unknown slot '" + text + "'", line_no);
    }
    return slot;
}

}  // namespace

GrammarSpec GrammarSpec::default_spec() {
    GrammarSpec spec;
    spec.numbers = {"sg", "pl"};
    spec.cases = {"nom", "gen", "dat", "acc"};
    spec.genders = {"f", "m1"};
    spec.nouns = {{"vela", "f"},  {"mira", "f"},  {"sona", "f"}, {"tava", "f"},
                  {"runa", "f"},  {"pola", "f"},  {"brok", "m1"}, {"dren", "m1"},
                  {"fort", "m1"}, {"glin", "m1"}, {"stol", "m1"}, {"krag", "m1"}};
    spec.abbrevs = {{"vl", "vela"}, {"mr", "mira"}, {"br", "brok"}, {"gl", "glin"}};
    spec.words = {{"tam", "adv"}, {"oto", "qub"}, {"i", "conj"}, {".", "interp"}};

    auto tpl = [](std::initializer_list<Slot> slots) {
        return SentenceTemplate{std::vector<Slot>(slots)};
    };
    auto det = [](std::size_t g) { return Slot{Slot::Kind::det, g, ""}; };
    auto adj = [](std::size_t g) { return Slot{Slot::Kind::adj, g, ""}; };
    auto noun = [](std::size_t g) { return Slot{Slot::Kind::noun, g, ""}; };
    auto verb = [](std::size_t g) { return Slot{Slot::Kind::verb, g, ""}; };
    auto word = [](const char* name) { return Slot{Slot::Kind::word, 0, name}; };

    spec.templates = {
        tpl({det(1), adj(1), noun(1), verb(1), word(".")}),
        tpl({det(1), noun(1), verb(1), word("tam"), word(".")}),
        tpl({word("oto"), det(1), adj(1), adj(1), noun(1), verb(1), word(".")}),
        tpl({det(1), noun(1), word("i"), det(2), noun(2), verb(1), word(".")}),
        tpl({det(1), adj(1), noun(1), word("i"), det(2), adj(2), noun(2), verb(2), word("tam"),
             word(".")}),
        tpl({word("tam"), det(1), adj(1), noun(1), verb(1), word("i"), det(2), noun(2),
             word(".")}),
    };
    spec.seed = 1;
    return spec;
}

GrammarSpec GrammarSpec::read(std::istream& in) {
    GrammarSpec spec;
    spec.numbers.clear();
    spec.cases.clear();
    spec.genders.clear();
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
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ParseError("expected key=value", line_no);
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "seed") {
            try {
                spec.seed = std::stoull(value);
            } catch (const std::exception&) {
                throw ParseError("bad seed", line_no);
            }
        } else if (key == "numbers") {
            spec.numbers = split_commas(value, line_no);
        } else if (key == "cases") {
            spec.cases = split_commas(value, line_no);
        } else if (key == "genders") {
            spec.genders = split_commas(value, line_no);
        } else if (key == "noun") {
            auto parts = split_ws(value);
            if (parts.size() != 2) {
                throw ParseError("expected noun=lexeme gender", line_no);
            }
            spec.nouns.push_back(NounLexeme{parts[0], parts[1]});
        } else if (key == "abbrev") {
            auto parts = split_ws(value);
            if (parts.size() != 2) {
                throw ParseError("expected abbrev=key lexeme", line_no);
            }
            spec.abbrevs.emplace_back(parts[0], parts[1]);
        } else if (key == "word") {
            auto parts = split_ws(value);
            if (parts.size() != 2) {
                throw ParseError("expected word=name tag", line_no);
            }
            spec.words.push_back(FixedWord{parts[0], parts[1]});
        } else if (key == "template") {
            SentenceTemplate tpl;
            for (const auto& part : split_ws(value)) {
                tpl.slots.push_back(parse_slot(part, line_no));
            }
            if (tpl.slots.empty()) {
                throw ParseError("empty template", line_no);
            }
            spec.templates.push_back(std::move(tpl));
        } else {
            throw ParseError("unknown key '" + key + "'", line_no);
        }
    }
    spec.validate();
    return spec;
}

void GrammarSpec::validate() const {
    auto check_values = [](const std::vector<std::string>& values, const char* what) {
        if (values.empty()) {
            throw InvalidSpec(std::string(what) + " set is empty");
        }
        std::set<std::string> seen;
        for (const auto& v : values) {
            if (!valid_segment(v)) {
                throw InvalidSpec(std::string(what) + " value '" + v + "' is not a tag segment");
            }
            if (!seen.insert(v).second) {
                throw InvalidSpec(std::string(what) + " value '" + v + "' repeats");
            }
        }
    };
    check_values(numbers, "numbers");
    check_values(cases, "cases");
    check_values(genders, "genders");

    if (nouns.empty()) {
        throw InvalidSpec("no noun lexemes");
    }
    std::set<std::string> noun_names;
    for (const auto& n : nouns) {
        if (!valid_segment(n.lexeme)) {
            throw InvalidSpec("bad noun lexeme '" + n.lexeme + "'");
        }
        if (!contains(genders, n.gender)) {
            throw InvalidSpec("noun '" + n.lexeme + "' has unknown gender '" + n.gender + "'");
        }
        if (!noun_names.insert(n.lexeme).second) {
            throw InvalidSpec("noun '" + n.lexeme + "' repeats");
        }
    }

    std::set<std::string> abbrev_keys;
    for (const auto& [abbrev, lexeme] : abbrevs) {
        if (abbrev.empty() || lexeme.empty()) {
            throw InvalidSpec("empty abbreviation entry");
        }
        if (!abbrev_keys.insert(abbrev).second) {
            throw InvalidSpec("abbreviation '" + abbrev + "' repeats");
        }
        if (noun_names.count(lexeme) == 0) {
            throw InvalidSpec("abbreviation '" + abbrev + "' expands to unknown lexeme '" +
                              lexeme + "'");
        }
    }

    std::set<std::string> word_names;
    for (const auto& w : words) {
        if (!valid_segment(w.name)) {
            throw InvalidSpec("bad word name '" + w.name + "'");
        }
        if (!word_names.insert(w.name).second) {
            throw InvalidSpec("word '" + w.name + "' repeats");
        }
        Tag tag;
        try {
            tag = parse_tag(w.tag);
        } catch (const Error& e) {
            throw InvalidSpec("word '" + w.name + "' has a bad tag: " + e.what());
        }
        if (tag.grammatical_class == kNounClass || tag.grammatical_class == kDetClass ||
            tag.grammatical_class == kAdjClass || tag.grammatical_class == kVerbClass) {
            throw InvalidSpec("word '" + w.name + "' reuses an agreement class");
        }
    }

    if (templates.empty()) {
        throw InvalidSpec("no sentence templates");
    }
    for (const auto& tpl : templates) {
        if (tpl.slots.empty() || tpl.slots.size() > 30) {
            throw InvalidSpec("template length must be 1..30 tokens");
        }
        std::set<std::size_t> noun_groups;
        std::set<std::size_t> covered_groups;  // groups with a det or adj
        for (const auto& slot : tpl.slots) {
            switch (slot.kind) {
                case Slot::Kind::noun:
                    noun_groups.insert(slot.group);
                    break;
                case Slot::Kind::det:
                case Slot::Kind::adj:
                    covered_groups.insert(slot.group);
                    break;
                case Slot::Kind::verb:
                    break;
                case Slot::Kind::word:
                    if (word_names.count(slot.word) == 0) {
                        throw InvalidSpec("template references undefined word '" + slot.word +
                                          "'");
                    }
                    break;
            }
        }
        for (const auto& slot : tpl.slots) {
            if ((slot.kind == Slot::Kind::det || slot.kind == Slot::Kind::adj ||
                 slot.kind == Slot::Kind::verb) &&
                noun_groups.count(slot.group) == 0) {
                throw InvalidSpec("agreement slot references a group without a noun");
            }
        }
        for (std::size_t g : noun_groups) {
            if (covered_groups.count(g) == 0) {
                // nothing pins number/case for this noun: several tags would
                // be consistent with any context
                throw InvalidSpec("noun group " + std::to_string(g) +
                                  " lacks a det/adj; its tag is not recoverable");
            }
        }
    }

    // Templates with identical class sequences must agree on structure, or a
    // sentence could parse two ways with different forced tags.
    for (std::size_t a = 0; a < templates.size(); ++a) {
        for (std::size_t b = a + 1; b < templates.size(); ++b) {
            const auto& ta = templates[a].slots;
            const auto& tb = templates[b].slots;
            if (ta.size() != tb.size()) {
                continue;
            }
            bool same_classes = true;
            for (std::size_t i = 0; i < ta.size(); ++i) {
                if (slot_class(ta[i], *this) != slot_class(tb[i], *this)) {
                    same_classes = false;
                    break;
                }
            }
            if (!same_classes) {
                continue;
            }
            for (std::size_t i = 0; i < ta.size(); ++i) {
                if (ta[i].kind != tb[i].kind || ta[i].group != tb[i].group ||
                    ta[i].word != tb[i].word) {
                    throw InvalidSpec("templates " + std::to_string(a) + " and " +
                                      std::to_string(b) +
                                      " share a class sequence but disagree on agreement");
                }
            }
        }
    }
}

const NounLexeme* GrammarSpec::find_noun(std::string_view lexeme) const {
    for (const auto& n : nouns) {
        if (n.lexeme == lexeme) {
            return &n;
        }
    }
    return nullptr;
}

bool GrammarSpec::abbrevable(std::string_view lexeme) const {
    for (const auto& [abbrev, base] : abbrevs) {
        if (base == lexeme) {
            return true;
        }
    }
    return false;
}

double GrammarSpec::baseline_expectation() const {
    return 1.0 / static_cast<double>(numbers.size() * cases.size());
}

std::string noun_surface(std::string_view lexeme, std::string_view number,
                         std::string_view case_) {
    std::string s(lexeme);
    s += '_';
    s += number;
    s += '_';
    s += case_;
    return s;
}

namespace {

struct GroupChoice {
    const NounLexeme* noun;
    std::string number;
    std::string case_;
};

}  // namespace

SynthCorpus generate_corpus(const GrammarSpec& spec, std::size_t n_sentences) {
    spec.validate();
    SynthCorpus out;
    Rng rng(spec.seed);

    for (std::size_t s = 0; s < n_sentences; ++s) {
        const SentenceTemplate& tpl = spec.templates[rng.below(spec.templates.size())];

        // groups sampled in ascending id order, deterministically
        std::set<std::size_t> group_ids;
        for (const auto& slot : tpl.slots) {
            if (slot.kind != Slot::Kind::word) {
                group_ids.insert(slot.group);
            }
        }
        std::map<std::size_t, GroupChoice> groups;
        for (std::size_t g : group_ids) {
            GroupChoice choice;
            choice.noun = &spec.nouns[rng.below(spec.nouns.size())];
            choice.number = spec.numbers[rng.below(spec.numbers.size())];
            choice.case_ = spec.cases[rng.below(spec.cases.size())];
            groups.emplace(g, std::move(choice));
        }

        Sentence sentence;
        for (const auto& slot : tpl.slots) {
            Token token;
            if (slot.kind == Slot::Kind::word) {
                const auto it = std::find_if(spec.words.begin(), spec.words.end(),
                                             [&](const FixedWord& w) { return w.name == slot.word; });
                token.surface = it->name;
                token.lexeme = it->name;
                token.tag = parse_tag(it->tag);
            } else {
                const GroupChoice& g = groups.at(slot.group);
                const std::string& gender = g.noun->gender;
                switch (slot.kind) {
                    case Slot::Kind::noun:
                        token.surface = noun_surface(g.noun->lexeme, g.number, g.case_);
                        token.lexeme = g.noun->lexeme;
                        token.tag = Tag{std::string(kNounClass), {g.number, g.case_, gender}};
                        break;
                    case Slot::Kind::det:
                        token.surface = "det_" + g.number + "_" + g.case_ + "_" + gender;
                        token.lexeme = "det";
                        token.tag = Tag{std::string(kDetClass), {g.number, g.case_, gender}};
                        break;
                    case Slot::Kind::adj:
                        token.surface = "adj_" + g.number + "_" + g.case_ + "_" + gender;
                        token.lexeme = "adj";
                        token.tag = Tag{std::string(kAdjClass), {g.number, g.case_, gender}};
                        break;
                    case Slot::Kind::verb:
                        token.surface = "verb_" + g.number;
                        token.lexeme = "verb";
                        token.tag = Tag{std::string(kVerbClass), {g.number}};
                        break;
                    case Slot::Kind::word:
                        break;
                }
            }
            sentence.tokens.push_back(std::move(token));
        }
        out.sentences.push_back(std::move(sentence));
    }

    std::ostringstream dict;
    for (const auto& noun : spec.nouns) {
        for (const auto& number : spec.numbers) {
            for (const auto& case_ : spec.cases) {
                dict << noun_surface(noun.lexeme, number, case_) << '\t' << noun.lexeme << '\t'
                     << kNounClass << ':' << number << ':' << case_ << ':' << noun.gender << '\n';
            }
        }
    }
    out.morphdict_source = dict.str();

    std::ostringstream abbrevs;
    for (const auto& [abbrev, lexeme] : spec.abbrevs) {
        abbrevs << abbrev << '\t' << lexeme << '\n';
    }
    out.abbrev_table_source = abbrevs.str();
    return out;
}

namespace {

struct AgreementValues {
    std::optional<std::string> number;
    std::optional<std::string> case_;
    std::optional<std::string> gender;

    // false on conflict
    bool merge(const std::optional<std::string>& n, const std::optional<std::string>& c,
               const std::optional<std::string>& g) {
        auto fold = [](std::optional<std::string>& into, const std::optional<std::string>& v) {
            if (!v) {
                return true;
            }
            if (into && *into != *v) {
                return false;
            }
            into = v;
            return true;
        };
        return fold(number, n) && fold(case_, c) && fold(gender, g);
    }
};

bool tag_matches_sets(const Tag& tag, const GrammarSpec& spec, std::size_t n_attrs) {
    if (tag.attributes.size() != n_attrs) {
        return false;
    }
    if (n_attrs >= 1 && !contains(spec.numbers, tag.attributes[0])) {
        return false;
    }
    if (n_attrs >= 2 && !contains(spec.cases, tag.attributes[1])) {
        return false;
    }
    if (n_attrs >= 3 && !contains(spec.genders, tag.attributes[2])) {
        return false;
    }
    return true;
}

}  // namespace

Tag oracle_tag(const GrammarSpec& spec, const Sentence& sentence, std::size_t position) {
    spec.validate();
    if (position >= sentence.tokens.size()) {
        throw Error("position outside the sentence");
    }
    const Token& masked = sentence.tokens[position];
    const NounLexeme* noun = spec.find_noun(masked.lexeme);
    if (noun == nullptr || !spec.abbrevable(masked.lexeme)) {
        throw NotAbbreviatable("token '" + masked.surface +
                               "' does not hold an abbreviatable noun");
    }

    std::set<std::string> candidates;
    for (const auto& tpl : spec.templates) {
        if (tpl.slots.size() != sentence.tokens.size()) {
            continue;
        }
        if (tpl.slots[position].kind != Slot::Kind::noun) {
            continue;
        }
        bool ok = true;
        std::map<std::size_t, AgreementValues> groups;
        for (std::size_t i = 0; i < tpl.slots.size() && ok; ++i) {
            const Slot& slot = tpl.slots[i];
            const Tag& tag = sentence.tokens[i].tag;
            if (i == position) {
                continue;  // the unknown; only its slot kind matters
            }
            switch (slot.kind) {
                case Slot::Kind::det:
                case Slot::Kind::adj: {
                    const auto expected = slot.kind == Slot::Kind::det ? kDetClass : kAdjClass;
                    if (tag.grammatical_class != expected || !tag_matches_sets(tag, spec, 3)) {
                        ok = false;
                        break;
                    }
                    ok = groups[slot.group].merge(tag.attributes[0], tag.attributes[1],
                                                  tag.attributes[2]);
                    break;
                }
                case Slot::Kind::noun: {
                    if (tag.grammatical_class != kNounClass || !tag_matches_sets(tag, spec, 3)) {
                        ok = false;
                        break;
                    }
                    ok = groups[slot.group].merge(tag.attributes[0], tag.attributes[1],
                                                  tag.attributes[2]);
                    break;
                }
                case Slot::Kind::verb: {
                    if (tag.grammatical_class != kVerbClass || !tag_matches_sets(tag, spec, 1)) {
                        ok = false;
                        break;
                    }
                    ok = groups[slot.group].merge(tag.attributes[0], std::nullopt, std::nullopt);
                    break;
                }
                case Slot::Kind::word: {
                    const auto it =
                        std::find_if(spec.words.begin(), spec.words.end(),
                                     [&](const FixedWord& w) { return w.name == slot.word; });
                    if (format_tag(tag) != it->tag) {
                        ok = false;
                    }
                    break;
                }
            }
        }
        if (!ok) {
            continue;
        }
        const AgreementValues& g = groups[tpl.slots[position].group];
        // validate() guarantees a det/adj in the group, so number and case
        // are pinned whenever the parse succeeded
        if (!g.number || !g.case_) {
            continue;
        }
        if (g.gender && *g.gender != noun->gender) {
            continue;  // modifiers disagree with the lexeme's gender
        }
        candidates.insert(std::string(kNounClass) + ":" + *g.number + ":" + *g.case_ + ":" +
                          noun->gender);
    }

    if (candidates.empty()) {
        throw AmbiguousContext("no tag is consistent with the context");
    }
    if (candidates.size() > 1) {
        throw AmbiguousContext("several tags are consistent with the context");
    }
    return parse_tag(*candidates.begin());
}

AttributeSchema schema_for(const GrammarSpec& spec) {
    std::ostringstream src;
    auto emit = [&src](const char* name, const std::vector<std::string>& values) {
        src << name << '=';
        for (std::size_t i = 0; i < values.size(); ++i) {
            src << (i > 0 ? "," : "") << values[i];
        }
        src << '\n';
    };
    emit("number", spec.numbers);
    emit("case", spec.cases);
    emit("gender", spec.genders);
    std::istringstream in(src.str());
    return AttributeSchema::read(in);
}

}  // namespace mtag
