#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace loop {

// 64-bit FNV-1a. The seed is folded into the offset basis.
constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline void hash_combine(std::size_t& seed, std::size_t value) noexcept {
    seed ^= value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

std::string hex_digest(std::string_view data);

}  // namespace loop
