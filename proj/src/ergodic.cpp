#include "stobs/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stobs/parallel.hpp"

namespace stobs {

// ---------------------------------------------------------------------------
// Functionals.

std::string Functional::id() const {
  switch (kind) {
    case Kind::ClippedHNorm: return "clipped-h-norm";
    case Kind::MeanValue: return "mean-value";
    case Kind::ContactFraction: return "contact-fraction";
  }
  return "?";
}

double functional_bound(const Functional& phi, const Field& psi) {
  return phi.bound > 0.0 ? phi.bound : 10.0 * norm_H(psi) + 10.0;
}

double eval(const Functional& phi, const Field& u, const Field& psi) {
  const double b = functional_bound(phi, psi);
  switch (phi.kind) {
    case Functional::Kind::ClippedHNorm:
      return phi.scale * std::min(norm_H(u), b);
    case Functional::Kind::MeanValue: {
      const double m = std::pow(u.grid.h, u.grid.dim) * u.values.sum();
      return phi.scale * std::clamp(m, -b, b);
    }
    case Functional::Kind::ContactFraction: {
      const double near = static_cast<double>(((u.values - psi.values) < u.grid.h).count());
      return phi.scale * near / static_cast<double>(u.grid.dof());
    }
  }
  throw ValidationError("unknown functional");
}

// ---------------------------------------------------------------------------
// Statistics helpers.

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

double stderr_of_mean(const std::vector<double>& v) {
  const auto n = v.size();
  if (n < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  LineFit out;
  const auto n = xs.size();
  out.points = static_cast<int>(n);
  if (n < 2 || ys.size() != n) return out;
  const double xm = mean_of(xs), ym = mean_of(ys);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - xm) * (xs[i] - xm);
    sxy += (xs[i] - xm) * (ys[i] - ym);
  }
  if (sxx == 0.0) return out;
  out.slope = sxy / sxx;
  out.intercept = ym - out.slope * xm;
  if (n > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ys[i] - (out.intercept + out.slope * xs[i]);
      ssr += r * r;
    }
    out.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Regime classifier.

std::string RegimeReport::existence_name() const {
  switch (existence) {
    case Existence::ErgodicInvariant: return "ergodic-invariant";
    case Existence::Invariant: return "invariant";
    case Existence::NoneCertified: return "none-certified";
  }
  return "?";
}

std::string RegimeReport::p_case_name() const {
  switch (p_case) {
    case PCase::pGT2: return "pGT2";
    case PCase::pEQ2: return "pEQ2";
    case PCase::pLT2: return "pLT2";
  }
  return "?";
}

RegimeReport classify_regime(const ProblemSpec& spec, double delta) {
  validate(spec);
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ValidationError("classify_regime: delta must lie in (0,1)");
  }
  RegimeReport rep;
  const double p = spec.op.p;
  rep.p_case = p > 2.0 ? RegimeReport::PCase::pGT2
                       : (p == 2.0 ? RegimeReport::PCase::pEQ2 : RegimeReport::PCase::pLT2);
  rep.delta = delta;
  rep.C_D = poincare_embedding_constant(spec.grid);
  rep.L_G = spec.noise.L_G();
  rep.lambda = spec.op.lambda();
  rep.lambda_T = spec.op.lambda_T();
  rep.kbold = spec.noise.Kbold(spec.grid);
  rep.bounded_noise = rep.lambda <= 0.0 && std::isfinite(rep.kbold);

  // K-grid scan of g(K) = L_G (1+K^2) / (2K^2); the infimum L_G/2 is
  // approached as K grows.
  const int n_k = 81;
  rep.K_grid.resize(n_k);
  rep.per_K_cond_slack.resize(n_k);
  double best_slack = -std::numeric_limits<double>::infinity();
  double g_at_opt = std::numeric_limits<double>::infinity();
  const double alpha = spec.op.alpha();
  for (int i = 0; i < n_k; ++i) {
    const double K = std::pow(10.0, -2.0 + 6.0 * i / (n_k - 1));
    const double g = rep.L_G * (1.0 + K * K) / (2.0 * K * K);
    const double slack = (1.0 - delta) * alpha - rep.C_D * std::max(0.0, rep.lambda + g);
    rep.K_grid[i] = K;
    rep.per_K_cond_slack[i] = slack;
    if (slack > best_slack || (slack == best_slack && g < g_at_opt)) {
      best_slack = slack;
      g_at_opt = g;
      rep.K_opt = K;
    }
  }
  rep.cond_invariant_slack = best_slack;
  rep.gamma_condition_slack = spec.op.gamma - (rep.lambda + g_at_opt);
  rep.gamma_condition = rep.gamma_condition_slack > 0.0;

  switch (rep.p_case) {
    case RegimeReport::PCase::pGT2:
      rep.existence = RegimeReport::Existence::ErgodicInvariant;
      break;
    case RegimeReport::PCase::pEQ2:
      if (rep.cond_invariant_slack > 0.0 || rep.bounded_noise) {
        rep.existence = RegimeReport::Existence::ErgodicInvariant;
      } else {
        rep.existence = RegimeReport::Existence::NoneCertified;
      }
      break;
    case RegimeReport::PCase::pLT2:
      if (rep.bounded_noise || rep.gamma_condition) {
        rep.existence = RegimeReport::Existence::Invariant;
      } else {
        rep.existence = RegimeReport::Existence::NoneCertified;
      }
      break;
  }

  rep.uniqueness_margin = 0.5 * rep.L_G + spec.op.lambda_T_effective();
  rep.uniqueness = rep.uniqueness_margin < 0.0 &&
                   rep.existence != RegimeReport::Existence::NoneCertified;
  if (rep.uniqueness) rep.existence = RegimeReport::Existence::ErgodicInvariant;

  const double damping = spec.op.kappa + spec.op.gamma;
  const double c = spec.noise.c;
  rep.example_margin_conservative = 2.0 * c * c - damping;
  rep.example_margin_kinfty = 0.5 * c * c - damping;
  return rep;
}

// ---------------------------------------------------------------------------
// Path-walking helpers.

namespace {

struct PathState {
  Field u;
  std::uint64_t trajectory_id;
  std::uint64_t step = 0;
};

StepResult advance(const ProblemSpec& spec, const StepConfig& cfg, PathState& s,
                   std::uint64_t seed) {
  const NoiseIncrement inc =
      sample_increment(spec.noise, cfg.dt, RngStream{seed, s.trajectory_id, s.step});
  StepResult res = semi_implicit_step(spec.op, spec.noise, cfg, spec.psi, spec.f, s.u, inc);
  s.u = res.u_next;
  ++s.step;
  return res;
}

}  // namespace

// ---------------------------------------------------------------------------
// Coupling experiment.

CouplingFit coupling_decay(const ProblemSpec& spec, const StepConfig& cfg, const Field& x,
                           const Field& y, double horizon, int n_paths, std::uint64_t seed,
                           int record_every, int threads, double fit_floor) {
  validate(spec);
  validate(cfg, spec.op);
  require_same_grid(x, y);
  if ((x.values < spec.psi.values).any() || (y.values < spec.psi.values).any()) {
    throw ValidationError("coupling_decay: both initial states must satisfy u >= psi");
  }
  if (n_paths < 1) throw ValidationError("coupling_decay: n_paths must be >= 1");
  const int n_steps = step_count(horizon, cfg.dt);
  if (record_every < 1) record_every = 1;

  std::vector<int> record_steps;
  record_steps.push_back(0);
  for (int k = record_every; k <= n_steps; k += record_every) record_steps.push_back(k);
  if (record_steps.back() != n_steps) record_steps.push_back(n_steps);
  const std::size_t n_rec = record_steps.size();

  const double hd = std::pow(spec.grid.h, spec.grid.dim);
  std::vector<std::vector<double>> gap_sq(static_cast<std::size_t>(n_paths),
                                          std::vector<double>(n_rec, 0.0));

  parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t path) {
    Field ux = x, uy = y;
    std::size_t rec = 0;
    auto record = [&](int step_idx) {
      if (rec < n_rec && record_steps[rec] == step_idx) {
        gap_sq[path][rec] = hd * (ux.values - uy.values).square().sum();
        ++rec;
      }
    };
    record(0);
    for (int k = 0; k < n_steps; ++k) {
      const NoiseIncrement inc = sample_increment(
          spec.noise, cfg.dt, RngStream{seed, static_cast<std::uint64_t>(path),
                                        static_cast<std::uint64_t>(k)});
      ux = semi_implicit_step(spec.op, spec.noise, cfg, spec.psi, spec.f, ux, inc).u_next;
      uy = semi_implicit_step(spec.op, spec.noise, cfg, spec.psi, spec.f, uy, inc).u_next;
      record(k + 1);
    }
  });

  CouplingFit fit;
  fit.n_paths = n_paths;
  fit.theoretical_exponent = spec.noise.L_G() + 2.0 * spec.op.lambda_T_effective();
  fit.initial_gap_sq = hd * (x.values - y.values).square().sum();
  fit.times.resize(n_rec);
  fit.mean_sq_gap.resize(n_rec);
  fit.stderrs.resize(n_rec);
  std::vector<double> column(static_cast<std::size_t>(n_paths));
  for (std::size_t r = 0; r < n_rec; ++r) {
    for (std::size_t pth = 0; pth < static_cast<std::size_t>(n_paths); ++pth) {
      column[pth] = gap_sq[pth][r];
    }
    fit.times[r] = record_steps[r] * cfg.dt;
    fit.mean_sq_gap[r] = mean_of(column);
    fit.stderrs[r] = stderr_of_mean(column);
  }

  std::vector<double> ts, logs;
  for (std::size_t r = 0; r < n_rec; ++r) {
    const double bound = std::exp(fit.theoretical_exponent * fit.times[r]) * fit.initial_gap_sq;
    if (fit.mean_sq_gap[r] - 2.0 * fit.stderrs[r] > bound + 1e-12) fit.feller_bound_ok = false;
    if (fit.mean_sq_gap[r] > fit_floor) {
      ts.push_back(fit.times[r]);
      logs.push_back(std::log(fit.mean_sq_gap[r]));
    }
  }
  const LineFit lf = fit_line(ts, logs);
  fit.fitted_exponent = lf.slope;
  fit.fit_ci_halfwidth = 2.0 * lf.slope_stderr;
  fit.points_in_fit = lf.points;
  return fit;
}

// ---------------------------------------------------------------------------
// Krylov-Bogoliubov averaging.

ErgodicEstimate kb_average(const ProblemSpec& spec, const StepConfig& cfg,
                           const Functional& phi, double horizon, double burn_in,
                           int n_paths, std::uint64_t seed, std::uint64_t traj_offset,
                           int threads) {
  validate(spec);
  validate(cfg, spec.op);
  if (!(burn_in >= 0.0 && burn_in < horizon)) {
    throw ValidationError("InvalidWindow: need 0 <= burn_in < horizon");
  }
  if (n_paths < 1) throw ValidationError("kb_average: n_paths must be >= 1");
  const int n_steps = step_count(horizon, cfg.dt);
  const int burn_steps = static_cast<int>(std::ceil(burn_in / cfg.dt - 1e-9));

  ErgodicEstimate est;
  est.functional_id = phi.id();
  est.horizon = horizon;
  est.burn_in = burn_in;
  est.n_paths = n_paths;
  est.per_path.assign(static_cast<std::size_t>(n_paths), 0.0);

  parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t path) {
    PathState s{spec.u0, traj_offset + path};
    double acc = 0.0;
    for (int k = 0; k < n_steps; ++k) {
      advance(spec, cfg, s, seed);
      if (k + 1 > burn_steps) acc += eval(phi, s.u, spec.psi);
    }
    est.per_path[path] = acc / static_cast<double>(n_steps - burn_steps);
  });

  est.kb_average = mean_of(est.per_path);
  est.stderr_mean = stderr_of_mean(est.per_path);
  return est;
}

// ---------------------------------------------------------------------------
// Convergence to equilibrium.

EquilibriumGap equilibrium_gap(const ProblemSpec& spec, const StepConfig& cfg,
                               const Functional& phi, const Field& x,
                               const std::vector<double>& times, int n_paths,
                               std::uint64_t seed, int threads) {
  validate(spec);
  validate(cfg, spec.op);
  if (times.empty()) throw ValidationError("equilibrium_gap: times must be nonempty");
  if (n_paths < 1) throw ValidationError("equilibrium_gap: n_paths must be >= 1");
  if ((x.values < spec.psi.values).any()) {
    throw ValidationError("equilibrium_gap: x must satisfy x >= psi");
  }

  std::vector<int> rec_steps;
  for (double t : times) rec_steps.push_back(step_count(t, cfg.dt));
  if (!std::is_sorted(rec_steps.begin(), rec_steps.end())) {
    throw ValidationError("equilibrium_gap: times must be increasing");
  }
  const int n_steps = rec_steps.back();

  EquilibriumGap out;
  out.times = times;
  out.theoretical_exponent = 0.5 * spec.noise.L_G() + spec.op.lambda_T_effective();
  out.uniqueness_certified = classify_regime(spec).uniqueness;

  // mu_hat from one long run: horizon 10x the fit window, burn-in the window.
  {
    const int long_steps = 10 * std::max(1, n_steps);
    const int long_burn = std::max(1, n_steps);
    PathState s{x, static_cast<std::uint64_t>(n_paths)};
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(long_steps - long_burn));
    for (int k = 0; k < long_steps; ++k) {
      advance(spec, cfg, s, seed);
      if (k + 1 > long_burn) samples.push_back(eval(phi, s.u, spec.psi));
    }
    out.mu_hat = mean_of(samples);
    // batch means stderr (accounts for autocorrelation)
    const int n_batches = 16;
    const std::size_t batch = samples.size() / n_batches;
    if (batch >= 1) {
      std::vector<double> bm;
      for (int bdx = 0; bdx < n_batches; ++bdx) {
        double acc = 0.0;
        for (std::size_t j = 0; j < batch; ++j) acc += samples[bdx * batch + j];
        bm.push_back(acc / static_cast<double>(batch));
      }
      out.mu_stderr = stderr_of_mean(bm);
    }
  }

  // P_t phi(x) by ensemble average at the recorded times.
  const std::size_t n_rec = rec_steps.size();
  std::vector<std::vector<double>> vals(static_cast<std::size_t>(n_paths),
                                        std::vector<double>(n_rec, 0.0));
  parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t path) {
    PathState s{x, path};
    std::size_t rec = 0;
    while (rec < n_rec && rec_steps[rec] == 0) {
      vals[path][rec] = eval(phi, s.u, spec.psi);
      ++rec;
    }
    for (int k = 0; k < n_steps && rec < n_rec; ++k) {
      advance(spec, cfg, s, seed);
      while (rec < n_rec && rec_steps[rec] == k + 1) {
        vals[path][rec] = eval(phi, s.u, spec.psi);
        ++rec;
      }
    }
  });

  out.p_t_phi.resize(n_rec);
  out.stderrs.resize(n_rec);
  out.gap.resize(n_rec);
  std::vector<double> column(static_cast<std::size_t>(n_paths));
  std::vector<double> fit_ts, fit_logs;
  for (std::size_t r = 0; r < n_rec; ++r) {
    for (std::size_t pth = 0; pth < static_cast<std::size_t>(n_paths); ++pth) {
      column[pth] = vals[pth][r];
    }
    out.p_t_phi[r] = mean_of(column);
    out.stderrs[r] = stderr_of_mean(column);
    out.gap[r] = std::abs(out.p_t_phi[r] - out.mu_hat);
    const double joint = std::sqrt(out.stderrs[r] * out.stderrs[r] +
                                   out.mu_stderr * out.mu_stderr);
    const double noise_floor = 1e-12 * (1.0 + std::abs(out.mu_hat));
    if (out.gap[r] > std::max(3.0 * joint, noise_floor)) {
      fit_ts.push_back(out.times[r]);
      fit_logs.push_back(std::log(out.gap[r]));
    }
  }
  if (fit_ts.size() >= 2) {
    const LineFit lf = fit_line(fit_ts, fit_logs);
    out.fitted_exponent = lf.slope;
    out.points_in_fit = lf.points;
  } else {
    out.signal_below_noise = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tightness scan.

TightnessScan tightness_scan(const ProblemSpec& spec, const StepConfig& cfg,
                             const std::vector<double>& horizons, double burn_in,
                             int n_paths, std::uint64_t seed, int threads) {
  validate(spec);
  validate(cfg, spec.op);
  if (horizons.empty() || !std::is_sorted(horizons.begin(), horizons.end())) {
    throw ValidationError("tightness_scan: horizons must be increasing");
  }
  if (n_paths < 1) throw ValidationError("tightness_scan: n_paths must be >= 1");

  std::vector<int> marks;
  for (double t : horizons) marks.push_back(step_count(t, cfg.dt));
  const int n_steps = marks.back();
  const int burn_steps = static_cast<int>(std::ceil(burn_in / cfg.dt - 1e-9));
  if (burn_steps >= marks.front()) {
    throw ValidationError("tightness_scan: burn_in must precede the first horizon");
  }

  const double p = spec.op.p;
  const std::size_t n_h = marks.size();
  std::vector<std::vector<double>> int0(static_cast<std::size_t>(n_paths),
                                        std::vector<double>(n_h, 0.0));
  std::vector<std::vector<double>> intb = int0;

  parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t path) {
    PathState s{spec.u0, path};
    double acc0 = 0.0, accb = 0.0;
    std::size_t m = 0;
    for (int k = 0; k < n_steps; ++k) {
      advance(spec, cfg, s, seed);
      const double vp = std::pow(norm_Vp(s.u, p), p) * cfg.dt;
      acc0 += vp;
      if (k + 1 > burn_steps) accb += vp;
      while (m < n_h && marks[m] == k + 1) {
        int0[path][m] = acc0;
        intb[path][m] = accb;
        ++m;
      }
    }
  });

  TightnessScan scan;
  scan.horizons = horizons;
  scan.burn_in = burn_in;
  scan.n_paths = n_paths;
  scan.avg_from_zero.resize(n_h);
  scan.avg_from_burnin.resize(n_h);
  std::vector<double> column(static_cast<std::size_t>(n_paths));
  for (std::size_t m = 0; m < n_h; ++m) {
    for (std::size_t pth = 0; pth < static_cast<std::size_t>(n_paths); ++pth) {
      column[pth] = int0[pth][m];
    }
    scan.avg_from_zero[m] = mean_of(column) / horizons[m];
    for (std::size_t pth = 0; pth < static_cast<std::size_t>(n_paths); ++pth) {
      column[pth] = intb[pth][m];
    }
    scan.avg_from_burnin[m] = mean_of(column) / (horizons[m] - burn_steps * cfg.dt);
  }
  const auto [lo, hi] =
      std::minmax_element(scan.avg_from_burnin.begin(), scan.avg_from_burnin.end());
  scan.max_over_min = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  return scan;
}

// ---------------------------------------------------------------------------
// Lewy-Stampacchia certification.

LSReport ls_check(const ProblemSpec& spec, const StepConfig& cfg, double horizon, int n_paths,
                  std::uint64_t seed, double tol, int threads) {
  validate(spec);
  validate(cfg, spec.op);
  if (n_paths < 1) throw ValidationError("ls_check: n_paths must be >= 1");
  const int n_steps = step_count(horizon, cfg.dt);

  const CompatibilityData compat = compute_compatibility(spec.op, spec.psi, spec.f);
  const Vec& h_minus = compat.h_minus.values;

  std::vector<double> worst_k(static_cast<std::size_t>(n_paths),
                              -std::numeric_limits<double>::infinity());
  std::vector<double> worst_upper = worst_k;

  parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t path) {
    PathState s{spec.u0, path};
    double wk = -std::numeric_limits<double>::infinity();
    double wu = wk;
    for (int k = 0; k < n_steps; ++k) {
      const StepResult res = advance(spec, cfg, s, seed);
      wk = std::max(wk, res.multiplier.values.maxCoeff());
      wu = std::max(wu, ((-res.multiplier.values) - h_minus).maxCoeff());
    }
    worst_k[path] = wk;
    worst_upper[path] = wu;
  });

  LSReport rep;
  rep.n_paths = n_paths;
  rep.tol = tol;
  rep.h_minus_inf = h_minus.abs().maxCoeff();
  rep.max_violation_lower = *std::max_element(worst_k.begin(), worst_k.end());
  rep.max_violation_upper = *std::max_element(worst_upper.begin(), worst_upper.end());
  rep.pass = rep.max_violation_lower <= tol &&
             rep.max_violation_upper <= tol * (1.0 + rep.h_minus_inf);
  return rep;
}

// ---------------------------------------------------------------------------
// Penalization rate study.

RateStudy penalization_rate_study(const ProblemSpec& spec, const StepConfig& cfg_base,
                                  const std::vector<double>& epsilons, double horizon,
                                  int n_paths, std::uint64_t seed, int threads,
                                  double fit_floor) {
  validate(spec);
  validate(cfg_base, spec.op);
  if (epsilons.size() < 3) {
    throw ValidationError("penalization_rate_study: need at least 3 epsilon values");
  }
  for (std::size_t i = 1; i < epsilons.size(); ++i) {
    if (!(epsilons[i] < epsilons[i - 1])) {
      throw ValidationError("penalization_rate_study: epsilons must be strictly decreasing");
    }
  }
  if (n_paths < 1) throw ValidationError("penalization_rate_study: n_paths must be >= 1");
  const int n_steps = step_count(horizon, cfg_base.dt);
  const double hd = std::pow(spec.grid.h, spec.grid.dim);
  const std::size_t n_eps = epsilons.size();

  std::vector<std::vector<double>> sup_err(static_cast<std::size_t>(n_paths),
                                           std::vector<double>(n_eps, 0.0));

  parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t path) {
    // Reference: exact VI steps driven by its own state, shared increments.
    std::vector<Vec> ref_states;
    ref_states.reserve(static_cast<std::size_t>(n_steps) + 1);
    Field uref = spec.u0;
    ref_states.push_back(uref.values);
    for (int k = 0; k < n_steps; ++k) {
      const NoiseIncrement inc = sample_increment(
          spec.noise, cfg_base.dt,
          RngStream{seed, static_cast<std::uint64_t>(path), static_cast<std::uint64_t>(k)});
      const Field noise_term = apply_G(spec.noise, uref, spec.psi, inc);
      uref = vi_reference_step(spec.op, cfg_base, spec.psi, spec.f, uref, noise_term);
      ref_states.push_back(uref.values);
    }

    for (std::size_t e = 0; e < n_eps; ++e) {
      StepConfig cfg = cfg_base;
      cfg.epsilon = epsilons[e];
      Field u = spec.u0;
      double sup = 0.0;
      for (int k = 0; k < n_steps; ++k) {
        const NoiseIncrement inc = sample_increment(
            spec.noise, cfg.dt,
            RngStream{seed, static_cast<std::uint64_t>(path), static_cast<std::uint64_t>(k)});
        u = semi_implicit_step(spec.op, spec.noise, cfg, spec.psi, spec.f, u, inc).u_next;
        const double err = hd * (u.values - ref_states[static_cast<std::size_t>(k) + 1])
                                    .square()
                                    .sum();
        sup = std::max(sup, err);
      }
      sup_err[path][e] = sup;
    }
  });

  RateStudy study;
  study.epsilons = epsilons;
  study.fit_floor = fit_floor;
  study.theoretical_slope = spec.op.p >= 2.0 ? 1.0 : 1.0 / (spec.op.p - 1.0);
  study.errors.resize(n_eps);
  std::vector<double> column(static_cast<std::size_t>(n_paths));
  std::vector<double> log_eps, log_err;
  for (std::size_t e = 0; e < n_eps; ++e) {
    for (std::size_t pth = 0; pth < static_cast<std::size_t>(n_paths); ++pth) {
      column[pth] = sup_err[pth][e];
    }
    study.errors[e] = mean_of(column);
    if (study.errors[e] > fit_floor) {
      log_eps.push_back(std::log(epsilons[e]));
      log_err.push_back(std::log(study.errors[e]));
    }
  }
  const LineFit lf = fit_line(log_eps, log_err);
  study.points_used = lf.points;
  study.degenerate = lf.points < 2;
  study.fitted_slope = study.degenerate ? 0.0 : lf.slope;
  return study;
}

}  // namespace stobs
