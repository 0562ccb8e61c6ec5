#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace mtag {

// Incremental FNV-1a (64-bit). Used for vocabulary fingerprints and the
// model container checksum.
struct Fnv1a64 {
    std::uint64_t value = 0xcbf29ce484222325ULL;

    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            value ^= p[i];
            value *= 0x100000001b3ULL;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
};

inline std::uint64_t fnv1a64(std::string_view s) {
    Fnv1a64 h;
    h.update(s);
    return h.value;
}

}  // namespace mtag
