#pragma once

#include <cstdint>
#include <string_view>

namespace pgmix {

/// 64-bit FNV-1a; stable across platforms, used for config hashes in outputs.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace pgmix
