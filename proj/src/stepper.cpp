#include "stobs/stepper.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <string>
#include <vector>

namespace stobs {

void validate(const ProblemSpec& p) {
  validate(p.op);
  validate(p.noise);
  if (!(p.psi.grid == p.grid) || !(p.f.grid == p.grid) || !(p.u0.grid == p.grid)) {
    throw GridMismatch();
  }
  require_finite(p.psi, "psi");
  require_finite(p.f, "f");
  require_finite(p.u0, "u0");
  if ((p.u0.values < p.psi.values).any()) {
    throw ValidationError("H6 violated: u0 must satisfy u0 >= psi nodally");
  }
}

void validate(const StepConfig& cfg, const OperatorSpec& op) {
  validate(op);
  if (!(cfg.dt > 0.0)) throw ValidationError("StepConfig: dt must be > 0");
  if (!(cfg.epsilon > 0.0)) throw ValidationError("InvalidEpsilon: epsilon must be > 0");
  if (!(cfg.newton_tol > 0.0)) throw ValidationError("StepConfig: newton_tol must be > 0");
  if (cfg.newton_max_iters < 1) throw ValidationError("StepConfig: newton_max_iters must be >= 1");
  if (cfg.pen_reg < 0.0) throw ValidationError("StepConfig: pen_reg must be >= 0");
  if (std::abs(cfg.q_tilde - op.q_tilde()) > 1e-12) {
    throw ValidationError("StepConfig: q_tilde must equal min(p,2) of the operator");
  }
  const double neg = std::max(0.0, -op.kappa) + std::max(0.0, -op.gamma);
  if (!(cfg.dt * neg < 1.0)) {
    throw ValidationError(
        "MonotonicityMarginViolated: dt*(max(0,-kappa)+max(0,-gamma)) must be < 1");
  }
}

int step_count(double horizon, double dt) {
  if (horizon < 0.0) throw ValidationError("horizon must be >= 0");
  const long long n = std::llround(horizon / dt);
  if (std::abs(n * dt - horizon) > 1e-8 * std::max(1.0, horizon)) {
    throw ValidationError("horizon must be an integer multiple of dt");
  }
  return static_cast<int>(n);
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// d(flux)/dg for flux(g) = (g^2+delta^2)^{(p-2)/2} g; nonnegative.
inline double flux_deriv(double g, double p, double delta) {
  if (delta == 0.0) {
    return (p - 1.0) * std::pow(std::abs(g), p - 2.0);
  }
  const double s = g * g + delta * delta;
  return std::pow(s, 0.5 * (p - 4.0)) * ((p - 1.0) * g * g + delta * delta);
}

/// Penalty magnitude (1/eps)*phi(gap) and its gap-derivative. For
/// q_tilde < 2 the kink at gap=0 is C^1-smoothed by pen_reg:
/// phi(gap) = (gap^2+r^2)^{(q~-1)/2} - r^{q~-1}.
struct PenaltyModel {
  double epsilon;
  double q_tilde;
  double reg;

  double value(double gap) const {
    if (gap <= 0.0) return 0.0;
    if (q_tilde == 2.0) return gap / epsilon;
    if (reg > 0.0) {
      return (std::pow(gap * gap + reg * reg, 0.5 * (q_tilde - 1.0)) -
              std::pow(reg, q_tilde - 1.0)) /
             epsilon;
    }
    return std::pow(gap, q_tilde - 1.0) / epsilon;
  }

  double deriv(double gap) const {
    if (gap <= 0.0) return 0.0;
    if (q_tilde == 2.0) return 1.0 / epsilon;
    if (reg > 0.0) {
      return (q_tilde - 1.0) * gap * std::pow(gap * gap + reg * reg, 0.5 * (q_tilde - 3.0)) /
             epsilon;
    }
    return (q_tilde - 1.0) * std::pow(gap, q_tilde - 2.0) / epsilon;
  }
};

/// Edge weights flux'(g_e)/h^2 and the diagonal/off-diagonal assembly of the
/// drift Jacobian dA/dv + (kappa+gamma) I, as triplets.
void assemble_drift_jacobian(const OperatorSpec& op, const Field& v, double shift,
                             double dt, std::vector<Triplet>& out) {
  const Grid& g = v.grid;
  const double inv_h = 1.0 / g.h;
  const double inv_h2 = inv_h * inv_h;
  const double p = op.p;
  const double delta = op.delta_reg;
  const auto& x = v.values;
  out.clear();

  auto add_edge = [&](int a, int b, double ga) {
    // a,b interior node indices; b < 0 marks a boundary edge.
    const double w = dt * flux_deriv(ga, p, delta) * inv_h2;
    out.emplace_back(a, a, w);
    if (b >= 0) {
      out.emplace_back(b, b, w);
      out.emplace_back(a, b, -w);
      out.emplace_back(b, a, -w);
    }
  };

  if (g.dim == 1) {
    add_edge(0, -1, x[0] * inv_h);
    for (int i = 1; i < g.n; ++i) add_edge(i, i - 1, (x[i] - x[i - 1]) * inv_h);
    add_edge(g.n - 1, -1, -x[g.n - 1] * inv_h);
  } else {
    const int n = g.n;
    auto id = [&](int ix, int iy) { return iy * n + ix; };
    auto at = [&](int ix, int iy) { return x[static_cast<Eigen::Index>(iy) * n + ix]; };
    for (int iy = 0; iy < n; ++iy) {
      add_edge(id(0, iy), -1, at(0, iy) * inv_h);
      for (int ix = 1; ix < n; ++ix)
        add_edge(id(ix, iy), id(ix - 1, iy), (at(ix, iy) - at(ix - 1, iy)) * inv_h);
      add_edge(id(n - 1, iy), -1, -at(n - 1, iy) * inv_h);
    }
    for (int ix = 0; ix < n; ++ix) {
      add_edge(id(ix, 0), -1, at(ix, 0) * inv_h);
      for (int iy = 1; iy < n; ++iy)
        add_edge(id(ix, iy), id(ix, iy - 1), (at(ix, iy) - at(ix, iy - 1)) * inv_h);
      add_edge(id(ix, n - 1), -1, -at(ix, n - 1) * inv_h);
    }
  }
  const auto ndof = static_cast<int>(g.dof());
  for (int i = 0; i < ndof; ++i) out.emplace_back(i, i, shift);
}

}  // namespace

namespace {

struct NewtonOutcome {
  int iters = 0;
  double residual = 0.0;
};

/// Damped Newton on v + dt*(A(v) + gamma v - pen) = b. Throws NewtonDiverged
/// on stall or iteration exhaustion.
NewtonOutcome newton_solve_penalized(const OperatorSpec& op, const StepConfig& cfg,
                                     const PenaltyModel& pen, const Field& psi, const Vec& b,
                                     double tol, int max_iters, Field& v) {
  const double dt = cfg.dt;
  auto residual = [&](const Field& w) -> Vec {
    Vec gap = (psi.values - w.values).max(0.0);
    Vec pen_val(gap.size());
    for (Eigen::Index i = 0; i < gap.size(); ++i) pen_val[i] = pen.value(gap[i]);
    Vec drift = apply_A(op, w).values + op.gamma * w.values - pen_val;
    return w.values + dt * drift - b;
  };

  Vec r = residual(v);
  double res_norm = r.abs().maxCoeff();
  // The per-step map is the gradient of a strictly convex potential, so the
  // Newton direction is a descent direction for the squared 2-norm merit;
  // damping on that merit cannot stall away from the root.
  double merit = r.matrix().squaredNorm();
  int iters = 0;

  const auto ndof = v.values.size();
  SpMat jac(ndof, ndof);
  std::vector<Triplet> trips;
  Eigen::SimplicialLDLT<SpMat> solver;

  while (res_norm > tol && iters < max_iters) {
    assemble_drift_jacobian(op, v, 1.0 + dt * (op.kappa + op.gamma), dt, trips);
    Vec gap = (psi.values - v.values).max(0.0);
    for (Eigen::Index i = 0; i < ndof; ++i) {
      const double pd = pen.deriv(gap[i]);
      if (pd != 0.0) trips.emplace_back(static_cast<int>(i), static_cast<int>(i), dt * pd);
    }
    jac.setFromTriplets(trips.begin(), trips.end());
    solver.compute(jac);
    if (solver.info() != Eigen::Success) {
      throw NewtonDiverged("semi_implicit_step: Jacobian factorization failed");
    }
    const Eigen::VectorXd d = solver.solve(-r.matrix());

    double t = 1.0;
    Field v_try = v;
    Vec r_try;
    double merit_try;
    while (true) {
      v_try.values = v.values + t * d.array();
      r_try = residual(v_try);
      merit_try = r_try.matrix().squaredNorm();
      if (merit_try < merit || t < 1e-14) break;
      t *= 0.5;
    }
    if (merit_try >= merit) {
      throw NewtonDiverged("semi_implicit_step: damped Newton stalled at residual " +
                           std::to_string(res_norm));
    }
    v = v_try;
    r = std::move(r_try);
    merit = merit_try;
    res_norm = r.abs().maxCoeff();
    ++iters;
  }
  if (res_norm > tol) {
    throw NewtonDiverged("semi_implicit_step: no convergence in " + std::to_string(max_iters) +
                         " iterations (residual " + std::to_string(res_norm) +
                         "); reduce dt or increase delta_reg");
  }
  return NewtonOutcome{iters, res_norm};
}

}  // namespace

StepResult semi_implicit_step(const OperatorSpec& op, const NoiseSpec& noise,
                              const StepConfig& cfg, const Field& psi, const Field& f,
                              const Field& u_n, const NoiseIncrement& inc) {
  validate(cfg, op);
  require_same_grid(u_n, psi);
  require_same_grid(u_n, f);
  require_finite(u_n, "semi_implicit_step input");

  const double dt = cfg.dt;
  const Field noise_term = apply_G(noise, u_n, psi, inc);
  const Vec b = u_n.values + dt * f.values + noise_term.values;
  const double reg = cfg.q_tilde < 2.0 ? cfg.pen_reg : 0.0;

  Field v = u_n;
  NewtonOutcome outcome;
  if (cfg.q_tilde == 2.0) {
    outcome = newton_solve_penalized(op, cfg, PenaltyModel{cfg.epsilon, 2.0, 0.0}, psi, b,
                                     cfg.newton_tol, cfg.newton_max_iters, v);
  } else {
    const PenaltyModel target{cfg.epsilon, cfg.q_tilde, reg};
    try {
      outcome = newton_solve_penalized(op, cfg, target, psi, b, cfg.newton_tol,
                                       cfg.newton_max_iters, v);
    } catch (const NewtonDiverged&) {
      // The sub-quadratic penalty makes the converged contact gap comparable
      // to the smoothing width, where the Jacobian varies over orders of
      // magnitude; fall back to a continuation in the penalty level so every
      // solve stays warm-started and mild.
      v = u_n;
      std::vector<double> stages;
      for (double e = std::max(cfg.epsilon, 1e-2); e > cfg.epsilon * 1.0000001; e *= 0.1) {
        stages.push_back(e);
      }
      stages.push_back(cfg.epsilon);
      int total_iters = 0;
      for (std::size_t s = 0; s < stages.size(); ++s) {
        const bool last = s + 1 == stages.size();
        const double stage_tol = last ? cfg.newton_tol : std::max(cfg.newton_tol, 1e-8);
        outcome = newton_solve_penalized(op, cfg, PenaltyModel{stages[s], cfg.q_tilde, reg},
                                         psi, b, stage_tol, cfg.newton_max_iters, v);
        total_iters += outcome.iters;
      }
      outcome.iters = total_iters;
    }
  }
  require_finite(v, "semi_implicit_step output");
  Field k = extract_multiplier(cfg, psi, v);
  return StepResult{std::move(v), std::move(k), outcome.iters, outcome.residual};
}

Field extract_multiplier(const StepConfig& cfg, const Field& psi, const Field& u_next) {
  return penalty_force(u_next, psi, cfg.epsilon, cfg.q_tilde);
}

Field vi_reference_step(const OperatorSpec& op, const StepConfig& cfg, const Field& psi,
                        const Field& f, const Field& u_n, const Field& noise_term) {
  validate(cfg, op);
  require_same_grid(u_n, psi);
  require_same_grid(u_n, f);
  require_same_grid(u_n, noise_term);

  const double dt = cfg.dt;
  const Vec b = u_n.values + dt * f.values + noise_term.values;
  const auto ndof = u_n.values.size();

  Field v{u_n.grid, u_n.values.max(psi.values)};
  auto unconstrained_residual = [&](const Field& w) -> Vec {
    Vec drift = apply_A(op, w).values + op.gamma * w.values;
    return w.values + dt * drift - b;
  };
  auto theta_of = [&](const Field& w, const Vec& fr) -> Vec {
    return (w.values - psi.values).min(fr);
  };

  Vec fr = unconstrained_residual(v);
  Vec theta = theta_of(v, fr);
  double res_norm = theta.abs().maxCoeff();

  SpMat jac(ndof, ndof);
  std::vector<Triplet> trips, mixed;
  Eigen::SparseLU<SpMat> solver;
  const int max_iters = std::max(100, 2 * cfg.newton_max_iters);
  int iters = 0;

  while (res_norm > cfg.newton_tol && iters < max_iters) {
    assemble_drift_jacobian(op, v, 1.0 + dt * (op.kappa + op.gamma), dt, trips);
    // Select rows: identity where the (v - psi) branch is active, F-Jacobian
    // rows elsewhere.
    std::vector<bool> primal(static_cast<std::size_t>(ndof));
    for (Eigen::Index i = 0; i < ndof; ++i) {
      primal[static_cast<std::size_t>(i)] = (v.values[i] - psi.values[i]) <= fr[i];
    }
    mixed.clear();
    for (const auto& t : trips) {
      if (!primal[static_cast<std::size_t>(t.row())]) mixed.push_back(t);
    }
    for (Eigen::Index i = 0; i < ndof; ++i) {
      if (primal[static_cast<std::size_t>(i)]) {
        mixed.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
      }
    }
    jac.setFromTriplets(mixed.begin(), mixed.end());
    solver.compute(jac);
    if (solver.info() != Eigen::Success) {
      throw VISolverStalled("vi_reference_step: Jacobian factorization failed");
    }
    const Eigen::VectorXd d = solver.solve(-theta.matrix());

    double t = 1.0;
    Field v_try = v;
    Vec fr_try, theta_try;
    double norm_try;
    while (true) {
      v_try.values = v.values + t * d.array();
      fr_try = unconstrained_residual(v_try);
      theta_try = theta_of(v_try, fr_try);
      norm_try = theta_try.abs().maxCoeff();
      if (norm_try < res_norm || t < 1e-12) break;
      t *= 0.5;
    }
    if (norm_try >= res_norm) {
      throw VISolverStalled("vi_reference_step: stalled at complementarity residual " +
                            std::to_string(res_norm));
    }
    v = v_try;
    fr = std::move(fr_try);
    theta = std::move(theta_try);
    res_norm = norm_try;
    ++iters;
  }
  if (res_norm > cfg.newton_tol) {
    throw VISolverStalled("vi_reference_step: no convergence (complementarity residual " +
                          std::to_string(res_norm) + ")");
  }
  v.values = v.values.max(psi.values);
  require_finite(v, "vi_reference_step output");
  return v;
}

Trajectory simulate_trajectory(const ProblemSpec& problem, const StepConfig& cfg,
                               double horizon, std::uint64_t trajectory_id,
                               std::uint64_t master_seed, int thin) {
  validate(problem);
  validate(cfg, problem.op);
  if (thin < 1) throw ValidationError("thin must be >= 1");
  const int n_steps = step_count(horizon, cfg.dt);

  Trajectory traj;
  traj.trajectory_id = trajectory_id;
  traj.master_seed = master_seed;
  traj.times.push_back(0.0);
  traj.states.push_back(problem.u0);
  traj.multipliers.push_back(make_field(problem.grid, 0.0));

  Field u = problem.u0;
  for (int step = 0; step < n_steps; ++step) {
    const NoiseIncrement inc = sample_increment(
        problem.noise, cfg.dt, RngStream{master_seed, trajectory_id, static_cast<std::uint64_t>(step)});
    StepResult res;
    try {
      res = semi_implicit_step(problem.op, problem.noise, cfg, problem.psi, problem.f, u, inc);
    } catch (const SolverError& e) {
      throw SolverError("step " + std::to_string(step) + ": " + e.what());
    }
    u = std::move(res.u_next);
    if ((step + 1) % thin == 0 || step + 1 == n_steps) {
      traj.times.push_back((step + 1) * cfg.dt);
      traj.states.push_back(u);
      traj.multipliers.push_back(std::move(res.multiplier));
    }
  }
  return traj;
}

}  // namespace stobs
