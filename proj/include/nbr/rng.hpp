#pragma once

#include <cstdint>
#include <random>

namespace nbr {

// splitmix64; used to derive independent child seeds from (seed, index).
uint64_t mix_seed(uint64_t seed, uint64_t index);

// Seeded generator with fixed-algorithm draws. std::uniform_real_distribution
// and std::normal_distribution are not pinned by the standard, so the
// transforms live here: identical seeds give identical streams on every
// platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // [0, 1), 53-bit resolution.
  double uniform01();

  // Gaussian via Box-Muller (both draws consumed every call).
  double gaussian(double sigma);

  // Uniform integer in [0, n), n >= 1.
  uint64_t below(uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace nbr
