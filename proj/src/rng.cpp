#include "stobs/rng.hpp"

#include <cmath>
#include <numbers>

namespace stobs::rng {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline std::uint32_t mulhi(std::uint32_t a, std::uint32_t b) {
  return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) >> 32);
}

inline std::array<std::uint32_t, 4> round_once(std::array<std::uint32_t, 4> x,
                                               std::array<std::uint32_t, 2> key) {
  const std::uint32_t hi0 = mulhi(kPhiloxM0, x[0]);
  const std::uint32_t lo0 = kPhiloxM0 * x[0];
  const std::uint32_t hi1 = mulhi(kPhiloxM1, x[2]);
  const std::uint32_t lo1 = kPhiloxM1 * x[2];
  return {hi1 ^ x[1] ^ key[0], lo1, hi0 ^ x[3] ^ key[1], lo0};
}

/// One Philox block for the given logical cell. The key folds the master
/// seed with a bijective image of the trajectory id, so distinct
/// trajectories can never alias under a fixed seed; the 128-bit counter
/// holds (step, substream).
inline std::array<std::uint32_t, 4> cell_block(std::uint64_t seed, std::uint64_t trajectory,
                                               std::uint64_t step, std::uint64_t substream) {
  const std::uint64_t key64 = seed ^ mix64(trajectory);
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(key64),
                                            static_cast<std::uint32_t>(key64 >> 32)};
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
      static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32)};
  return philox4x32(ctr, key);
}

inline double to_unit_interval(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  // 53 significant bits, shifted into (0,1].
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    ctr = round_once(ctr, key);
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double uniform(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step,
               std::uint64_t substream) {
  const auto r = cell_block(seed, trajectory, step, substream);
  return to_unit_interval(r[0], r[1]);
}

double normal(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step,
              std::uint64_t substream) {
  const auto r = cell_block(seed, trajectory, step, substream);
  const double u1 = to_unit_interval(r[0], r[1]);
  const double u2 = to_unit_interval(r[2], r[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace stobs::rng
