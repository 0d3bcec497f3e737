#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace soap {

// Seeded, reproducible random source. std::mt19937_64's output sequence is
// fixed by the standard, so transcripts are identical across platforms.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  void fill(std::span<std::uint8_t> out);
  /// Uniform in [0, 1).
  double uniform();

  /// Independent child stream, stable for a given (seed, stream) pair.
  [[nodiscard]] RandomSource fork(std::uint64_t stream) const;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace soap
