#pragma once

#include <cstdint>

#include "stobs/grid.hpp"

namespace stobs {

/// The operator family A(u) = -div(|grad u|^{p-2} grad u) + kappa*u plus the
/// optional zero-order Lipschitz term F(u) = gamma*u carried by the stepper.
/// Discretized as the H-gradient of the edge-based p-Dirichlet energy, which
/// keeps coercivity (alpha = 1) and T-monotonicity (lambda_T = -kappa) exact.
///
/// For p < 2 the flux is singular at zero gradient; delta_reg > 0 replaces
/// |g| by sqrt(g^2 + delta_reg^2) in the flux magnitude.
struct OperatorSpec {
  double p = 2.0;
  double kappa = 0.0;
  double gamma = 0.0;
  double delta_reg = 0.0;
  double kbar = 0.0;  // H_{2,3} bound; metadata, never used numerically

  double alpha() const { return 1.0; }
  double lambda() const { return kappa < 0.0 ? -kappa : 0.0; }
  double lambda_T() const { return -kappa; }
  double l1() const { return 0.0; }
  double L_F() const { return gamma < 0.0 ? -gamma : gamma; }
  double F0() const { return 0.0; }
  /// lambda_T of the full drift A + gamma*Id (the zero-order term shifts the
  /// T-monotonicity constant by -gamma).
  double lambda_T_effective() const { return -kappa - gamma; }
  double q_tilde() const { return p < 2.0 ? p : 2.0; }
};

void validate(const OperatorSpec& spec);

/// Nodal A(u): (1/h) * (flux differences over incident edges) + kappa*u.
Field apply_A(const OperatorSpec& spec, const Field& u);

/// Discrete energy whose H-gradient is apply_A:
/// (h^d/p) sum_e [(|D_e u|^2 + delta^2)^{p/2} - delta^p] + (kappa/2) h^d sum u^2.
double discrete_energy(const OperatorSpec& spec, const Field& u);

/// Max componentwise deviation between apply_A and central finite
/// differences of discrete_energy (scaled back to the H-gradient).
double apply_A_energy_gradient_check(const OperatorSpec& spec, const Field& u,
                                     double fd_step = 1e-5);

/// Penalty reaction -(1/epsilon) [(u - psi)^-]^{q_tilde - 1}, nodal.
/// Nonpositive; vanishes wherever u >= psi.
Field penalty_force(const Field& u, const Field& psi, double epsilon, double q_tilde);

/// h = f - A(psi) - gamma*psi split into nonnegative parts, h = h_plus - h_minus.
struct CompatibilityData {
  Field h_field;
  Field h_minus;
  Field h_plus;
};

CompatibilityData compute_compatibility(const OperatorSpec& spec, const Field& psi,
                                        const Field& f);

struct TMonotoneCheck {
  double min_slack;    // min over pairs of lambda_T(w,w^+)_H + <A(v1)-A(v2), w^+>
  int trials;
};

/// Fuzzes H_{2,2} over random field pairs; a correct assembly keeps the
/// slack at rounding level.
TMonotoneCheck check_T_monotone(const OperatorSpec& spec, const Grid& grid, int trials,
                                std::uint64_t rng_seed);

struct CoercivityCheck {
  double empirical_alpha;  // min over samples of lhs / ||v||_V^p
  double min_slack;        // min over samples of lhs - alpha ||v||_V^p
  int trials;
};

/// Fuzzes H_{2,1} with lambda = max(0, -kappa), l1 = 0, alpha = 1.
CoercivityCheck check_coercivity(const OperatorSpec& spec, const Grid& grid, int trials,
                                 std::uint64_t rng_seed);

}  // namespace stobs
