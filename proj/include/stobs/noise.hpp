#pragma once

#include <cstdint>

#include "stobs/grid.hpp"

namespace stobs {

enum class NoiseKind { Scalar, MultiMode, BoundedMultiMode };

/// Multiplicative Q-Wiener noise with diffusion factor vanishing at the
/// obstacle: G(u) acts as pointwise multiplication by c*(max(u,psi)-psi)
/// against the truncated eigenexpansion of Q (sine basis, q_k = k^{-(2+eta)}).
///
/// Lipschitz/trace bookkeeping uses the pointwise-factor surrogate
/// sum_k q_k ||Dg||_H^2, so L_G = c^2 (Scalar, one flat mode with q_1 = 1)
/// or c^2 * trace_Q (MultiMode).
struct NoiseSpec {
  NoiseKind kind = NoiseKind::Scalar;
  double c = 1.0;
  int modes = 1;
  double q_decay = 1.0;  // eta in q_k = k^{-(2+eta)}
  double clip = 0.0;     // range clamp, BoundedMultiMode only

  double q_k(int k) const;  // k in [1, modes]
  double trace_Q() const;
  double L_G() const;
  double M() const { return 0.0; }  // G(psi) = 0 exactly
  /// Bound K with ||G(sigma)||^2 <= K; finite iff BoundedMultiMode.
  double Kbold(const Grid& grid) const;
};

void validate(const NoiseSpec& spec);

/// Mode increments for one time step: betas[k] ~ Normal(0, dt), independent,
/// reproducible from the (seed, trajectory, step) cell with mode substreams.
struct NoiseIncrement {
  double dt = 0.0;
  Vec betas;
};

struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t trajectory_id = 0;
  std::uint64_t step_index = 0;
};

NoiseIncrement sample_increment(const NoiseSpec& spec, double dt, const RngStream& stream);

/// The clipped-argument diffusion of the penalized scheme,
/// G~(u) dW = c*(max(u,psi)-psi) * sum_k sqrt(q_k) e_k(x) dbeta_k.
/// Vanishes bitwise on nodes with u <= psi.
Field apply_G(const NoiseSpec& spec, const Field& u, const Field& psi,
              const NoiseIncrement& inc);

struct LipschitzCheck {
  double max_ratio;        // sup of trace_Q ||Dg||_H^2 / ||theta-sigma||_H^2
  double max_hs_norm_sq;   // sup of trace_Q ||g(sigma)||_H^2 over the samples
  int trials;
};

LipschitzCheck empirical_lipschitz(const NoiseSpec& spec, const Field& psi, int trials,
                                   std::uint64_t rng_seed);

}  // namespace stobs
