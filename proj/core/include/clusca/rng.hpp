#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>

namespace clusca {

// Purpose-specific substreams. Two generators with the same seed but
// different streams produce unrelated sequences.
enum class RngStream : std::uint32_t {
  general = 0,
  weights = 1,
  noise = 2,
  cluster_init = 3,
  selection = 4,
};

// Deterministic generator: std::mt19937_64 seeded through std::seed_seq from
// (seed, stream). Both algorithms are fully specified by the standard, so the
// raw 64-bit sequence is identical on every conforming platform. Uniform and
// normal variates are derived here (not via <random> distributions, whose
// algorithms are implementation-defined).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, RngStream stream = RngStream::general);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Standard normal via the Box-Muller transform; the second value
  // of each pair is kept for the next call.
  double normal();

  // Uniform integer in [0, n) by rejection sampling. n must be >= 1.
  std::size_t uniform_index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace clusca
