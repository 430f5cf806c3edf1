#ifndef FORMULAB_RNG_HPP_
#define FORMULAB_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "formulab/units.hpp"

namespace formulab {

// Derives a decorrelated child seed from (master seed, stream id), so each
// consumer (env resets, weight init, minibatch shuffling, action sampling)
// owns an independent stream. SplitMix64 finalizer.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// mt19937_64 with hand-rolled output mappings. std::*_distribution output is
// implementation-defined, which would tie run reproducibility to a specific
// standard library; these mappings are pinned here instead.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal, Box-Muller cosine branch. Two draws per sample, no
  // cached second value.
  double gaussian() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // Fisher-Yates. The modulo bias is ~2^-53 for the sizes used here.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(engine_() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace formulab

#endif  // FORMULAB_RNG_HPP_
