#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace estcorpus {

// 128-bit digest; `lo`/`hi` are the two 64-bit halves of MurmurHash3_x64_128.
struct Digest128 {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  friend bool operator==(const Digest128&, const Digest128&) = default;
  std::string hex() const;
};

// MurmurHash3_x64_128 over bytes, reading blocks little-endian regardless of host.
Digest128 murmur3_128(std::string_view bytes, std::uint32_t seed = 0) noexcept;

// Low half of murmur3_128; used for seeding and shard-independent ids.
inline std::uint64_t stable_hash64(std::string_view bytes, std::uint32_t seed = 0) noexcept {
  return murmur3_128(bytes, seed).lo;
}

struct Digest128Hash {
  std::size_t operator()(const Digest128& d) const noexcept {
    return static_cast<std::size_t>(d.lo ^ (d.hi * 0x9E3779B97F4A7C15ULL));
  }
};

}  // namespace estcorpus
