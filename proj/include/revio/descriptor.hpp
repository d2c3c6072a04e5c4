#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <string>

namespace revio {

// 256-bit binary descriptor.
struct Descriptor256 {
  std::array<std::uint64_t, 4> words{0, 0, 0, 0};

  bool bit(int i) const { return (words[i >> 6] >> (i & 63)) & 1u; }
  void set_bit(int i, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (v)
      words[i >> 6] |= mask;
    else
      words[i >> 6] &= ~mask;
  }
  void flip_bit(int i) { words[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  bool operator==(const Descriptor256&) const = default;

  std::string to_hex() const;
  static Descriptor256 from_hex(const std::string& hex);
};

inline int hamming_distance(const Descriptor256& a, const Descriptor256& b) {
  int d = 0;
  for (int i = 0; i < 4; ++i) d += std::popcount(a.words[i] ^ b.words[i]);
  return d;
}

}  // namespace revio
