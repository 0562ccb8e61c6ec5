#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtag {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error {
    using Error::Error;
};

// Carries the 1-based line number of the offending input line.
struct ParseError : Error {
    ParseError(const std::string& message, std::size_t line)
        : Error(message + " (line " + std::to_string(line) + ")"), line(line) {}
    std::size_t line;
};

// tag parsing / vocabularies
struct EmptyTag : Error {
    using Error::Error;
};
struct MalformedTag : Error {
    using Error::Error;
};
struct EmptyTagSet : Error {
    using Error::Error;
};
struct UnknownTag : Error {
    using Error::Error;
};
struct IndexOutOfVocab : Error {
    using Error::Error;
};

// corpus / data sets
struct EmptySet : Error {
    using Error::Error;
};
struct EmptyDataset : Error {
    using Error::Error;
};

// morphological dictionary
struct UnknownAbbrev : Error {
    using Error::Error;
};
struct NoSuchForm : Error {
    using Error::Error;
};

// network
struct InvalidConfig : Error {
    using Error::Error;
};
struct EmptySequence : Error {
    using Error::Error;
};
struct ShapeMismatch : Error {
    using Error::Error;
};
struct StaleCache : Error {
    using Error::Error;
};

// model container
struct BadMagic : Error {
    using Error::Error;
};
struct VersionMismatch : Error {
    using Error::Error;
};
struct ChecksumFailure : Error {
    using Error::Error;
};
struct VocabMismatch : Error {
    using Error::Error;
};

// synthetic grammar
struct InvalidSpec : Error {
    using Error::Error;
};
struct AmbiguousContext : Error {
    using Error::Error;
};
struct NotAbbreviatable : Error {
    using Error::Error;
};

}  // namespace mtag
