#pragma once

#include <cstdint>

namespace esb {

/// splitmix64 finalizer. Bijective, avalanches all bits.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for a numbered stream (replication index, bootstrap draw, ...).
/// Streams derived from the same master never share engine states, so
/// parallel runners can consume them in any order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix_seed(master ^ mix_seed(stream + 0x6A09E667F3BCC909ULL));
}

}  // namespace esb
