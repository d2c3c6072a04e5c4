#pragma once

#include <cstdint>

namespace revio {

// Counter-based randomness: every draw is a pure function of (seed, purpose,
// indices), so generated streams are reproducible regardless of evaluation
// order. splitmix64 finalizer as the mixing function.
namespace rng {

inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t purpose, std::uint64_t a = 0,
                         std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = mix(seed ^ 0x6a09e667f3bcc909ULL);
  h = mix(h ^ purpose);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

// Uniform in (0, 1).
inline double uniform01(std::uint64_t k) {
  return (static_cast<double>(mix(k) >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

// Standard normal via Box-Muller on two derived uniforms.
double gauss(std::uint64_t k);

// Purpose tags.
enum Purpose : std::uint64_t {
  kDescriptorCanonical = 1,
  kDescriptorFlip = 2,
  kPixelNoise = 3,
  kImuNoise = 4,
  kOcclusion = 5,
  kBiasWalk = 6,
  kLandmarkPlacement = 7,
  kGeneric = 100,
};

}  // namespace rng
}  // namespace revio
