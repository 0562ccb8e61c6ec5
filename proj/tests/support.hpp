#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <mtag/corpus.hpp>
#include <mtag/rng.hpp>
#include <mtag/tag.hpp>

namespace testsupport {

// A tag drawn from the valid grammar: 1-4 lowercase/digit segments.
inline std::string random_segment(mtag::Rng& rng) {
    static constexpr char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
    const std::size_t length = 1 + rng.below(6);
    std::string s;
    for (std::size_t i = 0; i < length; ++i) {
        s += alphabet[rng.below(sizeof(alphabet) - 1)];
    }
    return s;
}

inline std::string random_tag(mtag::Rng& rng) {
    std::string tag = random_segment(rng);
    const std::size_t attrs = rng.below(4);
    for (std::size_t i = 0; i < attrs; ++i) {
        tag += ':' + random_segment(rng);
    }
    return tag;
}

inline std::vector<mtag::Sentence> random_sentences(mtag::Rng& rng, std::size_t count) {
    std::vector<mtag::Sentence> sentences;
    for (std::size_t s = 0; s < count; ++s) {
        mtag::Sentence sentence;
        const std::size_t length = 1 + rng.below(12);
        for (std::size_t t = 0; t < length; ++t) {
            mtag::Token token;
            token.surface = random_segment(rng);
            token.lexeme = random_segment(rng);
            token.tag = mtag::parse_tag(random_tag(rng));
            sentence.tokens.push_back(std::move(token));
        }
        sentences.push_back(std::move(sentence));
    }
    return sentences;
}

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        std::string templ = (std::filesystem::temp_directory_path() / "mtag-XXXXXX").string();
        if (::mkdtemp(templ.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed");
        }
        path = templ;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct CliResult {
    int exit_code = -1;
    std::string out;
};

// Runs the mtag binary with stderr dropped; stdout captured.
inline CliResult run_cli(const std::string& args) {
#ifdef MTAG_CLI_PATH
    const std::string command = std::string(MTAG_CLI_PATH) + " " + args + " 2>/dev/null";
#else
    const std::string command = "mtag " + args + " 2>/dev/null";
#endif
    FILE* pipe = ::popen(command.c_str(), "r");
    if (pipe == nullptr) {
        throw std::runtime_error("popen failed");
    }
    CliResult result;
    char buffer[4096];
    std::size_t n = 0;
    while ((n = std::fread(buffer, 1, sizeof(buffer), pipe)) > 0) {
        result.out.append(buffer, n);
    }
    const int status = ::pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

inline std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        lines.push_back(line);
    }
    return lines;
}

}  // namespace testsupport
