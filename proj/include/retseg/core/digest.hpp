#pragma once

#include <cstdint>
#include <string>

namespace retseg {

// FNV-1a, the project's only content-hash (cell directories, determinism
// checks). Stable across platforms.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xCBF29CE484222325ULL);
std::uint64_t fnv1a64(const std::string& text, std::uint64_t seed = 0xCBF29CE484222325ULL);

std::string to_hex(std::uint64_t value);

}  // namespace retseg
