#include "cryptext/rng.hpp"

namespace cryptext {

uint64_t Rng::next_below(uint64_t n) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

namespace {

uint64_t mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

uint64_t derive_seed(uint64_t root, std::string_view label) {
  // FNV-1a over the label, then mixed with the root seed.
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return mix(root + 0x9e3779b97f4a7c15ull * h);
}

uint64_t derive_seed(uint64_t root, uint64_t index) {
  return mix(root + 0x9e3779b97f4a7c15ull * (index + 1));
}

}  // namespace cryptext
