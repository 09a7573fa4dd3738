#pragma once

#include <cstdint>
#include <random>

namespace discourse {

// Deliberately thin wrapper so every draw the engine makes is reproducible
// from the session seed alone, independent of stdlib distribution details.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform index in [0, n). n must be positive.
  std::size_t pick_index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace discourse
