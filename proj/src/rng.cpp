#include "meanfield/rng.hpp"

namespace meanfield {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream RngStream::substream(std::uint64_t master, std::string_view label,
                               std::uint64_t index_a, std::uint64_t index_b) {
  std::uint64_t s = splitmix64(master ^ fnv1a64(label));
  s = splitmix64(s ^ index_a);
  s = splitmix64(s ^ index_b);
  return RngStream(s);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  // rejection sampling to avoid modulo bias
  std::uint64_t limit = ~0ULL - (~0ULL % n + 1) % n;
  std::uint64_t v;
  do {
    v = gen_();
  } while (v > limit);
  return v % n;
}

}  // namespace meanfield
