#pragma once

#include <cstdint>

namespace fedhin {

// Sub-seed streams used by the experiment harness.
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kPartitionStream = 2;
inline constexpr std::uint64_t kSplitStream = 3;
inline constexpr std::uint64_t kClientStream = 100;  // + client index

/// Independent sub-seed for `stream` (splitmix64 finalizer).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace fedhin
