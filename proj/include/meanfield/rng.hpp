#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace meanfield {

// Deterministic random stream, derived from a master seed plus a named
// sub-stream label (and optional integer indices).  Every stochastic consumer
// in the toolkit owns its own labelled stream, so adding or removing one
// consumer never shifts the draws seen by another, and re-running with the
// same (config, seed) is bit-identical.
class RngStream {
 public:
  explicit RngStream(std::uint64_t raw_seed) : gen_(raw_seed) {}

  // Derives the stream for `label` (optionally indexed, e.g. one stream per
  // (N, repetition) pair) from the master seed.
  static RngStream substream(std::uint64_t master, std::string_view label,
                             std::uint64_t index_a = 0, std::uint64_t index_b = 0);

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 gen_;
};

// FNV-1a 64-bit hash; also used for output-file content hashes in manifests.
std::uint64_t fnv1a64(std::string_view bytes);

// One round of splitmix64 mixing.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace meanfield
