// Counter-based random numbers (Philox4x32-10) for reproducible parallel
// simulation.  Every draw is addressed by (seed, trajectory, step, channel,
// draw-pair), so results do not depend on thread scheduling or on how the
// trajectory loop is partitioned across workers.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace nopo::rng {

namespace detail {
inline void philox_round(std::array<std::uint32_t, 4>& c, std::uint32_t k0,
                         std::uint32_t k1) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
  const std::uint32_t h0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t l0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t h1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t l1 = static_cast<std::uint32_t>(p1);
  c = {h1 ^ c[1] ^ k0, l1, h0 ^ c[3] ^ k1, l0};
}
}  // namespace detail

// One 128-bit Philox4x32-10 block keyed by the 64-bit run seed.
inline std::array<std::uint32_t, 4> philox_block(
    std::uint64_t seed, std::array<std::uint32_t, 4> ctr) {
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  std::uint32_t k0 = static_cast<std::uint32_t>(seed);
  std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
  for (int r = 0; r < 10; ++r) {
    detail::philox_round(ctr, k0, k1);
    k0 += W0;
    k1 += W1;
  }
  return ctr;
}

// Stream address.  channel separates independent noise uses within one step
// (e.g. the two quadrature noises of a trajectory, or distinct Wiener
// processes); draw counts pairs within (step, channel).
inline std::array<std::uint32_t, 4> counter(std::uint64_t step,
                                            std::uint32_t channel,
                                            std::uint32_t draw,
                                            std::uint32_t traj) {
  return {static_cast<std::uint32_t>(step),
          static_cast<std::uint32_t>(step >> 32),
          (channel << 24) | (draw & 0x00FFFFFFu), traj};
}

inline double u64_to_unit(std::uint64_t v) {
  // (0,1]: strictly positive so log() below is always finite.
  return (static_cast<double>(v >> 11) + 1.0) * 0x1.0p-53;
}

struct NormalPair {
  double z0, z1;
};

// Two independent standard normals per Philox block (Box-Muller).
inline NormalPair normal_pair(std::uint64_t seed, std::uint32_t traj,
                              std::uint64_t step, std::uint32_t channel,
                              std::uint32_t draw = 0) {
  const auto x = philox_block(seed, counter(step, channel, draw, traj));
  const std::uint64_t v1 = (static_cast<std::uint64_t>(x[0]) << 32) | x[1];
  const std::uint64_t v2 = (static_cast<std::uint64_t>(x[2]) << 32) | x[3];
  const double u1 = u64_to_unit(v1);
  const double u2 = u64_to_unit(v2);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * M_PI * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

// Uniform 64-bit word, for seed derivation and auxiliary draws.
inline std::uint64_t uniform_u64(std::uint64_t seed, std::uint32_t traj,
                                 std::uint64_t step, std::uint32_t channel,
                                 std::uint32_t draw = 0) {
  const auto x = philox_block(seed, counter(step, channel, draw, traj));
  return (static_cast<std::uint64_t>(x[0]) << 32) | x[1];
}

// Derived child seed for index i of a sweep (documented scheme: one Philox
// block of the base seed on a dedicated channel).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint32_t index) {
  return uniform_u64(base, index, 0, 0xFFu);
}

}  // namespace nopo::rng
