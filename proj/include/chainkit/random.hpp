#pragma once

#include <cstdint>
#include <utility>

#include "chainkit/array.hpp"
#include "chainkit/tree.hpp"

namespace chainkit {

// Splittable, counter-based pseudo-random key. A key is an immutable 128-bit
// value; every operation on it is a pure function, so the same key always
// yields the same stream and disjoint split descendants are independent.
//
// Generator: Threefry2x64 with 20 rounds keyed by the 128-bit key, applied to
// a block counter. Normal variates come from the Box-Muller transform over
// the uniform stream; uniform doubles live strictly inside (0, 1).
struct RngKey {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  friend bool operator==(const RngKey&, const RngKey&) = default;
};

RngKey key_from_seed(std::uint64_t seed);

std::pair<RngKey, RngKey> split(const RngKey& key);

// The i-th 128-bit block of the key's raw output stream.
std::pair<std::uint64_t, std::uint64_t> random_block(const RngKey& key, std::uint64_t index);

// i.i.d. draws in the open interval (0, 1).
Array uniform_sample(const RngKey& key, const Shape& shape);

// i.i.d. standard normal draws.
Array normal_sample(const RngKey& key, const Shape& shape);

// Standard-normal tree with the same structure as prototype, filled from a
// single stream in depth-first leaf order.
Tree normal_sample_tree(const RngKey& key, const Tree& prototype);

}  // namespace chainkit
