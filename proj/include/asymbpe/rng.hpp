#pragma once

#include <cstdint>
#include <string_view>

namespace asymbpe {

// SplitMix64 (Steele, Lea & Flood 2014). Chosen because the whole algorithm
// is five lines, so a port in any language reproduces the same stream:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  // Unbiased draw from [0, bound) by rejection: values below
  // (2^64 - bound) mod bound are discarded, the rest reduced modulo bound.
  std::uint64_t uniform(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

// Seed for an independent substream, e.g. one randomization iteration.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace asymbpe
