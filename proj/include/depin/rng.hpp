#pragma once

#include <cstdint>
#include <random>

namespace depin {

// Seed splitting.
//
// Every random quantity is drawn from an mt19937_64 seeded with
// derive_seed(root, stream, index). `stream` names the consumer (precipitate
// centers, strengths, y placement, glide planes, ...) and `index` the item
// within it (precipitate number, Monte Carlo trial, sweep cell). Two draws
// never share an engine, so results do not depend on evaluation order or on
// how work is distributed over threads.

enum class Stream : std::uint64_t {
  centers = 1,
  strengths = 2,
  y_placement = 3,
  glide_plane = 4,
  plane_trials = 5,
  sweep_cell = 6,
  test = 99,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index) {
  return splitmix64(splitmix64(root ^ splitmix64(static_cast<std::uint64_t>(stream))) + index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t root, Stream stream, std::uint64_t index)
      : engine_(derive_seed(root, stream, index)) {}

  /// Uniform on [0, 1) with 53 random bits; identical on every platform.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace depin
