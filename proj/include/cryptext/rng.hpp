#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace cryptext {

// Deterministic PRNG (splitmix64). The standard <random> engines are
// portable but the distributions are not; every draw here is fully
// specified so that equal seeds give equal streams on any platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), rejection sampled (no modulo bias). n > 0.
  uint64_t next_below(uint64_t n);

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  bool next_bool(double p_true) { return next_double() < p_true; }

 private:
  uint64_t state_;
};

// Expands one root seed into independent per-stage streams. Labels keep
// the streams stable when stages are added or reordered.
uint64_t derive_seed(uint64_t root, std::string_view label);
uint64_t derive_seed(uint64_t root, uint64_t index);

// Fisher-Yates with draws from the given Rng.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace cryptext
