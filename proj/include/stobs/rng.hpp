#pragma once

#include <array>
#include <cstdint>

namespace stobs::rng {

/// Philox4x32-10 counter-based block cipher (Salmon et al. constants).
/// Stateless: output depends only on (counter, key), so draws indexed by
/// (master seed, trajectory id, step index, substream index) are identical
/// regardless of evaluation order or thread scheduling.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// splitmix64 finalizer; bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t z);

/// Uniform draw in (0,1], from the (seed, trajectory, step, substream) cell.
double uniform(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step,
               std::uint64_t substream);

/// Standard normal draw from the (seed, trajectory, step, substream) cell.
double normal(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step,
              std::uint64_t substream);

}  // namespace stobs::rng
