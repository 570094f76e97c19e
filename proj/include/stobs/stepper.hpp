#pragma once

#include <cstdint>
#include <vector>

#include "stobs/problem.hpp"

namespace stobs {

/// Drift/penalty-implicit, noise-explicit Euler-Maruyama configuration.
/// q_tilde must equal min(p,2) of the governing operator. The dt margin
/// dt*(max(0,-kappa) + max(0,-gamma)) < 1 keeps the per-step map monotone,
/// so each step is a well-posed root-find with a unique solution.
struct StepConfig {
  double dt = 0.01;
  double epsilon = 1e-5;
  double q_tilde = 2.0;
  double newton_tol = 1e-10;
  int newton_max_iters = 50;
  double pen_reg = 1e-10;  // C^1 smoothing of the penalty kink when q_tilde < 2
};

void validate(const StepConfig& cfg, const OperatorSpec& op);

struct StepResult {
  Field u_next;
  Field multiplier;  // k_epsilon at the new iterate
  int newton_iters = 0;
  double residual = 0.0;
};

/// One step of the penalized scheme: solve
///   v + dt*(A(v) + gamma*v - (1/eps)[(v-psi)^-]^{q~-1}) = u_n + dt*f + G~(u_n) dW.
StepResult semi_implicit_step(const OperatorSpec& op, const NoiseSpec& noise,
                              const StepConfig& cfg, const Field& psi, const Field& f,
                              const Field& u_n, const NoiseIncrement& inc);

/// k_eps = -(1/eps) [(psi - u_next)^+]^{q~-1}, nodal; nonpositive, zero off
/// the contact set.
Field extract_multiplier(const StepConfig& cfg, const Field& psi, const Field& u_next);

/// Exact discrete parabolic variational inequality step (the eps -> 0
/// reference): find v >= psi with componentwise complementarity
///   min(v - psi, v + dt*(A(v) + gamma*v) - b) = 0,  b = u_n + dt*f + noise_term,
/// solved by semismooth Newton on the min reformulation.
Field vi_reference_step(const OperatorSpec& op, const StepConfig& cfg, const Field& psi,
                        const Field& f, const Field& u_n, const Field& noise_term);

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> states;
  std::vector<Field> multipliers;
  std::uint64_t trajectory_id = 0;
  std::uint64_t master_seed = 0;
};

/// Pathwise simulation over [0, horizon] with horizon = N*dt; records the
/// state every `thin` steps (plus t=0 and the final time). Deterministic in
/// (trajectory_id, master_seed).
Trajectory simulate_trajectory(const ProblemSpec& problem, const StepConfig& cfg,
                               double horizon, std::uint64_t trajectory_id,
                               std::uint64_t master_seed, int thin = 1);

/// horizon/dt rounded to the nearest integer; throws unless horizon is an
/// integer multiple of dt (1e-8 relative slack).
int step_count(double horizon, double dt);

}  // namespace stobs
