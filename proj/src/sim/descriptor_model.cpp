#include <algorithm>
#include <cmath>

#include "revio/rng.hpp"
#include "revio/sim/simulator.hpp"

namespace revio {

namespace rng {
double gauss(std::uint64_t k) {
  const double u1 = uniform01(mix(k ^ 0xa5a5a5a5a5a5a5a5ULL));
  const double u2 = uniform01(mix(k ^ 0x5a5a5a5a5a5a5a5aULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}
}  // namespace rng

namespace sim {

double flip_probability(double view_angle) {
  constexpr double kHalfPi = 1.5707963267948966;
  return std::min(0.45, 0.02 + 0.25 * std::abs(view_angle) / kHalfPi);
}

Descriptor256 canonical_descriptor(int landmark_id, std::uint64_t world_seed) {
  Descriptor256 d;
  for (int w = 0; w < 4; ++w) {
    d.words[w] = rng::mix(rng::key(world_seed, rng::kDescriptorCanonical, landmark_id, w));
  }
  return d;
}

namespace {
Descriptor256 flip_bits(const Descriptor256& base, double p, std::uint64_t lm_key,
                        std::uint64_t frame_key, std::uint64_t seed) {
  Descriptor256 d = base;
  for (int i = 0; i < 256; ++i) {
    if (rng::uniform01(rng::key(seed, rng::kDescriptorFlip, lm_key, frame_key, i)) < p) {
      d.flip_bit(i);
    }
  }
  return d;
}
}  // namespace

Descriptor256 sample_descriptor(const Landmark& lm, double view_angle, std::uint64_t seed) {
  return flip_bits(lm.descriptor, flip_probability(view_angle), lm.id, 0, seed);
}

Descriptor256 observation_descriptor(int landmark_id, int frame_id, double view_angle,
                                     std::uint64_t world_seed, std::uint64_t run_seed) {
  return flip_bits(canonical_descriptor(landmark_id, world_seed), flip_probability(view_angle),
                   landmark_id, frame_id, run_seed);
}

}  // namespace sim
}  // namespace revio
