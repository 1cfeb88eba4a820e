#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace unseennet {

// FNV-1a, used for dataset/config fingerprints (not security).
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), h);
}

std::string hex64(uint64_t v);
uint64_t hash_file(const std::filesystem::path& path);

} // namespace unseennet
