#include "nbr/rng.hpp"

#include <cmath>

namespace nbr {

namespace {

uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

uint64_t mix_seed(uint64_t seed, uint64_t index) {
  uint64_t state = seed ^ (0xd1b54a32d192ed03ULL * (index + 1));
  return splitmix64(state);
}

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian(double sigma) {
  // Box-Muller; guard the log against a zero draw.
  double u1 = uniform01();
  const double u2 = uniform01();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  return sigma * r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

uint64_t Rng::below(uint64_t n) {
  // Bounded rejection sampling keeps the draw unbiased.
  const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

}  // namespace nbr
