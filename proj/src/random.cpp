#include "chainkit/random.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <numbers>

namespace chainkit {

namespace {

constexpr std::array<unsigned, 8> kRotations = {16, 42, 12, 31, 16, 32, 24, 21};
constexpr std::uint64_t kKeyParity = 0x1BD11BDAA9FC1A22ULL;

// Threefry2x64, 20 rounds.
std::pair<std::uint64_t, std::uint64_t> threefry2x64(std::uint64_t k0, std::uint64_t k1,
                                                     std::uint64_t c0, std::uint64_t c1) {
  const std::uint64_t ks[3] = {k0, k1, k0 ^ k1 ^ kKeyParity};
  std::uint64_t x0 = c0 + ks[0];
  std::uint64_t x1 = c1 + ks[1];
  for (unsigned round = 0; round < 20; ++round) {
    x0 += x1;
    x1 = std::rotl(x1, static_cast<int>(kRotations[round % 8]));
    x1 ^= x0;
    if (round % 4 == 3) {
      const unsigned inject = round / 4 + 1;
      x0 += ks[inject % 3];
      x1 += ks[(inject + 1) % 3] + inject;
    }
  }
  return {x0, x1};
}

// 53 significant bits, offset by half a lattice step so 0 is excluded.
double u64_to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

RngKey key_from_seed(std::uint64_t seed) {
  auto [hi, lo] = threefry2x64(0x9E3779B97F4A7C15ULL, 0xBB67AE8584CAA73BULL, seed, 0);
  return RngKey{hi, lo};
}

std::pair<RngKey, RngKey> split(const RngKey& key) {
  auto [a0, a1] = random_block(key, 0);
  auto [b0, b1] = random_block(key, 1);
  return {RngKey{a0, a1}, RngKey{b0, b1}};
}

std::pair<std::uint64_t, std::uint64_t> random_block(const RngKey& key, std::uint64_t index) {
  return threefry2x64(key.hi, key.lo, index, 0);
}

Array uniform_sample(const RngKey& key, const Shape& shape) {
  Array out = Array::zeros(shape);
  auto values = out.data();
  for (std::size_t i = 0; i < values.size(); i += 2) {
    auto [w0, w1] = random_block(key, i / 2);
    values[i] = u64_to_open_unit(w0);
    if (i + 1 < values.size()) values[i + 1] = u64_to_open_unit(w1);
  }
  return out;
}

Array normal_sample(const RngKey& key, const Shape& shape) {
  Array out = Array::zeros(shape);
  auto values = out.data();
  for (std::size_t i = 0; i < values.size(); i += 2) {
    auto [w0, w1] = random_block(key, i / 2);
    const double u1 = u64_to_open_unit(w0);
    const double u2 = u64_to_open_unit(w1);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    values[i] = radius * std::cos(angle);
    if (i + 1 < values.size()) values[i + 1] = radius * std::sin(angle);
  }
  return out;
}

Tree normal_sample_tree(const RngKey& key, const Tree& prototype) {
  Array flat = normal_sample(key, Shape{tree_num_elements(prototype)});
  std::size_t offset = 0;
  return tree_map(
      [&](const Array& leaf) {
        Array out = Array::zeros(leaf.shape());
        auto dst = out.data();
        auto src = flat.data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[offset + i];
        offset += dst.size();
        return out;
      },
      prototype);
}

}  // namespace chainkit
