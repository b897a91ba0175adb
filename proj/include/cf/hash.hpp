// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>

namespace cf {

// Stateless 64-bit mixing (splitmix64 finalizer). All randomness in the
// pipeline is derived from hashes of (seed, identity) pairs; there is no
// sequential RNG stream anywhere, so results never depend on evaluation
// order or worker count.
constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr uint64_t mix(uint64_t a, uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

/// Seeded FNV-1a over bytes with a splitmix64 finalizer.
constexpr uint64_t hash_bytes(std::string_view s, uint64_t seed) {
  uint64_t h = 0xcbf29ce484222325ULL ^ splitmix64(seed);
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

/// Per-node seed: mix(seed, node name). Inserting or renaming one node never
/// perturbs the randomness seen by any other node.
constexpr uint64_t derive_node_seed(uint64_t seed, std::string_view node_name) {
  return hash_bytes(node_name, seed);
}

/// Decision hash for one record under one operator. `tag` namespaces the
/// operator kind so distinct decisions drawn from the same node seed stay
/// uncorrelated.
constexpr uint64_t decision_hash(uint64_t node_seed, std::string_view tag,
                                 std::string_view dataset, std::string_view id) {
  uint64_t h = hash_bytes(tag, node_seed);
  h = hash_bytes(dataset, h);
  h = hash_bytes(id, h);
  return h;
}

/// Map a 64-bit hash onto [0, 1) using the top 53 bits.
constexpr double u01(uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace cf
