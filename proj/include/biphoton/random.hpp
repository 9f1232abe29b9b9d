#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

// Seed splitting. Every random stream is keyed by (master seed, purpose, ...)
// so streams stay fixed when other features are switched on or off.
namespace biphoton::rng {

enum class Purpose : std::uint64_t {
  Emission = 1,
  Delay = 2,
  Outcome = 3,
  Thinning = 4,
  Accidentals = 5,
  Counts = 6,
  Setting = 7,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

inline std::uint64_t derive(std::uint64_t seed, Purpose purpose,
                            std::initializer_list<std::uint64_t> keys = {}) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(purpose)));
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

// Uniform double in [0, 1) from the top 53 bits.
inline double to_unit(std::uint64_t bits) { return double(bits >> 11) * 0x1.0p-53; }

// Counter-based uniform: the same key always gives the same value.
inline double uniform_at(std::uint64_t seed, Purpose purpose,
                         std::initializer_list<std::uint64_t> keys) {
  return to_unit(derive(seed, purpose, keys));
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return to_unit(engine_()); }
  // Uniform in (0, 1], safe for logarithms.
  double uniform_open() { return 1.0 - uniform(); }
  double exponential(double rate) { return -std::log(uniform_open()) / rate; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace biphoton::rng
