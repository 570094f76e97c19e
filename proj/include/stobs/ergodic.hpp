#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stobs/stepper.hpp"

namespace stobs {

// ---------------------------------------------------------------------------
// Test functionals (bounded Lipschitz by construction).

struct Functional {
  enum class Kind { ClippedHNorm, MeanValue, ContactFraction };
  Kind kind = Kind::ClippedHNorm;
  double bound = 0.0;  // <= 0 selects the default 10*||psi||_H + 10
  double scale = 1.0;

  std::string id() const;
};

double functional_bound(const Functional& phi, const Field& psi);
double eval(const Functional& phi, const Field& u, const Field& psi);

// ---------------------------------------------------------------------------
// Regime classifier.

struct RegimeReport {
  enum class PCase { pGT2, pEQ2, pLT2 };
  enum class Existence { ErgodicInvariant, Invariant, NoneCertified };

  PCase p_case = PCase::pEQ2;
  Existence existence = Existence::NoneCertified;
  bool uniqueness = false;

  double cond_invariant_slack = 0.0;  // (1-delta)*alpha - C_D[lambda + L_G(1+K^2)/(2K^2)]^+
  bool bounded_noise = false;         // lambda <= 0 and finite K bound
  double kbold = 0.0;
  bool gamma_condition = false;       // L_G(1+K^2)/(2K^2) + lambda < gamma
  double gamma_condition_slack = 0.0;
  double uniqueness_margin = 0.0;     // L_G/2 + lambda_T - gamma
  double K_opt = 0.0;
  double delta = 0.25;
  double C_D = 0.0;
  double L_G = 0.0;
  double lambda = 0.0;
  double lambda_T = 0.0;

  // Informational margins for the worked example's bullets (kappa plus gamma
  // act as the damping coefficient there): conservative 2c^2 - damping and
  // the K->infinity rule c^2/2 - damping.
  double example_margin_conservative = 0.0;
  double example_margin_kinfty = 0.0;

  std::vector<double> K_grid;
  std::vector<double> per_K_cond_slack;

  std::string existence_name() const;
  std::string p_case_name() const;
};

RegimeReport classify_regime(const ProblemSpec& spec, double delta = 0.25);

// ---------------------------------------------------------------------------
// Shared-noise coupling (Feller contraction measurement).

struct CouplingFit {
  std::vector<double> times;
  std::vector<double> mean_sq_gap;   // MC estimate of E||u(t;x)-u(t;y)||_H^2
  std::vector<double> stderrs;
  double fitted_exponent = 0.0;
  double fit_ci_halfwidth = 0.0;     // 2 x OLS slope standard error
  double theoretical_exponent = 0.0; // L_G + 2(lambda_T - gamma)
  int n_paths = 0;
  bool feller_bound_ok = true;       // mean - 2se <= e^{theta t} ||x-y||^2 at all t
  double initial_gap_sq = 0.0;
  int points_in_fit = 0;
};

CouplingFit coupling_decay(const ProblemSpec& spec, const StepConfig& cfg, const Field& x,
                           const Field& y, double horizon, int n_paths, std::uint64_t seed,
                           int record_every = 1, int threads = 1, double fit_floor = 1e-18);

// ---------------------------------------------------------------------------
// Krylov-Bogoliubov time averaging.

struct ErgodicEstimate {
  std::string functional_id;
  double horizon = 0.0;
  double burn_in = 0.0;
  double kb_average = 0.0;
  double stderr_mean = 0.0;
  int n_paths = 0;
  std::vector<double> per_path;
};

/// Pathwise time average of phi(u_s) over (burn_in, horizon], ensemble mean
/// with standard error. traj_offset selects the RNG stream block.
ErgodicEstimate kb_average(const ProblemSpec& spec, const StepConfig& cfg,
                           const Functional& phi, double horizon, double burn_in,
                           int n_paths, std::uint64_t seed, std::uint64_t traj_offset = 0,
                           int threads = 1);

// ---------------------------------------------------------------------------
// Convergence to equilibrium.

struct EquilibriumGap {
  std::vector<double> times;
  std::vector<double> p_t_phi;      // ensemble estimate of P_t phi(x)
  std::vector<double> stderrs;
  std::vector<double> gap;          // |P_t phi(x) - mu_hat(phi)|
  double mu_hat = 0.0;
  double mu_stderr = 0.0;
  double fitted_exponent = 0.0;
  bool signal_below_noise = false;
  int points_in_fit = 0;
  double theoretical_exponent = 0.0;  // L_G/2 + lambda_T - gamma
  bool uniqueness_certified = true;
};

EquilibriumGap equilibrium_gap(const ProblemSpec& spec, const StepConfig& cfg,
                               const Functional& phi, const Field& x,
                               const std::vector<double>& times, int n_paths,
                               std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// Tightness scan (running averages of the V-norm energy).

struct TightnessScan {
  std::vector<double> horizons;
  std::vector<double> avg_from_zero;    // (1/t) int_0^t E||u||_V^p ds
  std::vector<double> avg_from_burnin;  // average over [burn_in, t]
  double burn_in = 0.0;
  double max_over_min = 0.0;            // spread of avg_from_burnin
  int n_paths = 0;
};

TightnessScan tightness_scan(const ProblemSpec& spec, const StepConfig& cfg,
                             const std::vector<double>& horizons, double burn_in,
                             int n_paths, std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// Lewy-Stampacchia certification: 0 <= -k <= h^- nodally.

struct LSReport {
  double max_violation_lower = 0.0;  // max over k (should be <= tol; k <= 0 by construction)
  double max_violation_upper = 0.0;  // max of (-k) - h^-
  double tol = 0.0;
  double h_minus_inf = 0.0;
  bool pass = false;
  int n_paths = 0;
};

LSReport ls_check(const ProblemSpec& spec, const StepConfig& cfg, double horizon, int n_paths,
                  std::uint64_t seed, double tol, int threads = 1);

// ---------------------------------------------------------------------------
// Penalization rate study against the VI reference with shared noise.

struct RateStudy {
  std::vector<double> epsilons;
  std::vector<double> errors;  // E sup_{t<=T} ||u_eps - u_ref||_H^2
  double fitted_slope = 0.0;
  double theoretical_slope = 0.0;  // 1 for p>=2, 1/(p-1) for p<2
  bool degenerate = false;
  int points_used = 0;
  double fit_floor = 0.0;
};

RateStudy penalization_rate_study(const ProblemSpec& spec, const StepConfig& cfg_base,
                                  const std::vector<double>& epsilons, double horizon,
                                  int n_paths, std::uint64_t seed, int threads = 1,
                                  double fit_floor = 1e-17);

// ---------------------------------------------------------------------------
// Small shared statistics helpers.

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  int points = 0;
};

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

double mean_of(const std::vector<double>& v);
double stderr_of_mean(const std::vector<double>& v);

}  // namespace stobs
