#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace roblearn {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

using Rng = std::mt19937_64;

// Labeled substreams: child(label) depends only on (seed, label), so adding a
// new consumer never shifts the draws of an existing one.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  SeedStream child(std::string_view label) const {
    return SeedStream(splitmix64(seed_ ^ splitmix64(fnv1a(label))));
  }
  SeedStream child(std::uint64_t index) const {
    return SeedStream(splitmix64(seed_ + splitmix64(index + 0x51ed2701ULL)));
  }

  Rng rng() const { return Rng(splitmix64(seed_)); }
  Rng rng(std::string_view label) const { return child(label).rng(); }

 private:
  std::uint64_t seed_;
};

inline double uniform01(Rng& g) { return std::uniform_real_distribution<double>(0.0, 1.0)(g); }

inline double gaussian(Rng& g) { return std::normal_distribution<double>(0.0, 1.0)(g); }

inline std::size_t uniform_index(Rng& g, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(g);
}

}  // namespace roblearn
