#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace replyset {

/// 64-bit FNV-1a. Stable across platforms and runs, unlike std::hash.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);

/// splitmix64 finalizer; used to derive seeded hash streams.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a over the bytes of a file.
std::uint64_t hash_file(const std::filesystem::path& path);

/// Lowercase 16-digit hex rendering.
std::string hex64(std::uint64_t value);

}  // namespace replyset
