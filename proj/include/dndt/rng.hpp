#pragma once

#include <cstdint>

namespace dndt {

// SplitMix64 finalizer. Maps (master seed, stream index) to a well-mixed
// child seed so parallel tasks get independent, reproducible streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace dndt
