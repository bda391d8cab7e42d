#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace asvi {

// SplitMix64 step, used for seed derivation only.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Child seed for an independent stream. Streams derived with distinct tags
// (or indices) never share state with the parent or each other.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t state = seed ^ (0x9e3779b97f4a7c15ULL * (tag + 0x632be59bd9b4e019ULL));
  std::uint64_t a = splitmix64(state);
  std::uint64_t b = splitmix64(state);
  return a ^ (b >> 1);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  return derive_seed(seed, hash_tag(tag));
}

// Seeded random stream. Distributions are generated from raw engine output
// by hand so that draws are bit-identical across platforms and standard
// library versions (std::normal_distribution et al. are implementation
// defined). Each normal() consumes exactly two engine outputs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform clamped strictly inside (0, 1); safe for logit transforms.
  double uniform_open(double margin = 1e-7) {
    double u = uniform01();
    if (u < margin) return margin;
    if (u > 1.0 - margin) return 1.0 - margin;
    return u;
  }

  // Standard normal via Box-Muller, no second-value caching.
  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Independent child stream; position of the parent does not matter.
  Rng split(std::string_view tag) const { return Rng(derive_seed(seed_, tag)); }
  Rng split(std::uint64_t tag) const { return Rng(derive_seed(seed_, tag)); }

  // Fisher-Yates shuffle driven by this stream.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform01() * static_cast<double>(i));
      if (j >= i) j = i - 1;
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace asvi
