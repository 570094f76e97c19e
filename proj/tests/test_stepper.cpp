#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stobs/presets.hpp"
#include "stobs/rng.hpp"
#include "stobs/stepper.hpp"

using namespace stobs;

namespace {

NoiseIncrement zero_increment(const NoiseSpec& spec, double dt) {
  return NoiseIncrement{dt, Vec::Zero(spec.modes)};
}

Field random_above(const Grid& g, const Field& psi, std::uint64_t seed, std::uint64_t trial) {
  Vec v(g.dof());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = psi.values[i] +
           std::abs(rng::normal(seed, trial, static_cast<std::uint64_t>(i), 13));
  }
  return Field{g, std::move(v)};
}

}  // namespace

TEST_CASE("step config validation") {
  const OperatorSpec op{2.0, -3.0, -4.0, 0.0};
  StepConfig cfg;
  cfg.dt = 0.2;  // 0.2 * 7 >= 1
  CHECK_THROWS_AS(validate(cfg, op), ValidationError);
  cfg.dt = 0.1;
  CHECK_NOTHROW(validate(cfg, op));

  StepConfig bad_q;
  bad_q.q_tilde = 2.0;
  CHECK_THROWS_AS(validate(bad_q, OperatorSpec{1.5, 0.0, 0.0, 1e-8}), ValidationError);
  bad_q.q_tilde = 1.5;
  CHECK_NOTHROW(validate(bad_q, OperatorSpec{1.5, 0.0, 0.0, 1e-8}));

  CHECK(step_count(1.0, 0.01) == 100);
  CHECK(step_count(0.0, 0.01) == 0);
  CHECK_THROWS_AS(step_count(0.015, 0.01), ValidationError);
}

TEST_CASE("stationary data is an exact fixed point") {
  const Grid g = build_grid(1, 16);
  const OperatorSpec op{3.0, 1.0, 0.5, 0.0};
  const NoiseSpec noise{NoiseKind::Scalar, 1.0, 1};
  const Field psi = sample(g, [](double x) { return std::sin(std::numbers::pi * x); });
  const Field f{g, Vec(apply_A(op, psi).values + op.gamma * psi.values)};
  StepConfig cfg;
  cfg.q_tilde = op.q_tilde();

  const StepResult res =
      semi_implicit_step(op, noise, cfg, psi, f, psi, zero_increment(noise, cfg.dt));
  CHECK(res.newton_iters <= 2);
  CHECK((res.u_next.values - psi.values).abs().maxCoeff() == 0.0);
  CHECK(res.multiplier.values.abs().maxCoeff() == 0.0);

  // G(psi) = 0 makes the noise term vanish even for nonzero increments
  const NoiseIncrement inc = sample_increment(noise, cfg.dt, RngStream{1, 2, 3});
  const StepResult res2 = semi_implicit_step(op, noise, cfg, psi, f, psi, inc);
  CHECK((res2.u_next.values - psi.values).abs().maxCoeff() == 0.0);
}

TEST_CASE("one-dof linear step, obstacle inactive") {
  const Grid g{1, 1, 0.5};
  const OperatorSpec op{2.0, 0.0, 0.0, 0.0};
  const NoiseSpec noise{NoiseKind::Scalar, 1.0, 1};
  const Field psi = make_field(g, -10.0);
  const Field f = make_field(g, 0.0);
  StepConfig cfg;
  cfg.dt = 0.1;

  const Field u_n = make_field(g, 1.0);
  const StepResult res =
      semi_implicit_step(op, noise, cfg, psi, f, u_n, zero_increment(noise, cfg.dt));
  // v + 0.1 * 8 v = 1
  CHECK(res.u_next.values[0] == doctest::Approx(1.0 / 1.8).epsilon(1e-10));
  CHECK(res.multiplier.values[0] == 0.0);
}

TEST_CASE("linear steps converge in one Newton iteration") {
  // p=2 with no contact is an affine system; an exact Jacobian must solve it
  // in a single iteration even with zero-order terms present
  const Grid g = build_grid(1, 12);
  const NoiseSpec noise{NoiseKind::Scalar, 0.0, 1};
  const Field psi = make_field(g, -100.0);
  const Field f = sample(g, [](double x) { return std::sin(x); });
  for (double kappa : {-2.0, 0.0, 3.0}) {
    for (double gamma : {-1.0, 0.0, 2.0}) {
      const OperatorSpec op{2.0, kappa, gamma, 0.0};
      StepConfig cfg;
      const Field u_n = sample(g, [](double x) { return x * (1.0 - x); });
      const StepResult res =
          semi_implicit_step(op, noise, cfg, psi, f, u_n, zero_increment(noise, cfg.dt));
      CHECK(res.newton_iters == 1);
      CHECK(res.residual <= cfg.newton_tol);
    }
  }
}

TEST_CASE("one-dof step pinned to the obstacle by the penalty") {
  const Grid g{1, 1, 0.5};
  const OperatorSpec op{2.0, 0.0, 0.0, 0.0};
  const NoiseSpec noise{NoiseKind::Scalar, 1.0, 1};
  const Field psi = make_field(g, 0.8);
  const Field f = make_field(g, 0.0);
  StepConfig cfg;
  cfg.dt = 0.1;
  cfg.epsilon = 1e-6;

  const Field u_n = make_field(g, 1.0);
  const StepResult res =
      semi_implicit_step(op, noise, cfg, psi, f, u_n, zero_increment(noise, cfg.dt));
  CHECK(res.u_next.values[0] == doctest::Approx(0.8).epsilon(1e-4));

  // the VI step lands on the obstacle exactly (active set of size 1)
  const Field vi = vi_reference_step(op, cfg, psi, f, u_n, make_field(g, 0.0));
  CHECK(vi.values[0] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("vi step coincides with the unconstrained step when inactive") {
  const Grid g = build_grid(1, 16);
  const OperatorSpec op{2.0, 0.5, 0.0, 0.0};
  const Field psi = make_field(g, -1e9);
  const Field f = sample(g, [](double x) { return std::sin(x); });
  StepConfig cfg;
  const Field u_n = sample(g, [](double x) { return x * (1.0 - x); });
  const Field noise_term = make_field(g, 0.0);

  const Field vi = vi_reference_step(op, cfg, psi, f, u_n, noise_term);
  const NoiseSpec noise{NoiseKind::Scalar, 0.0, 1};
  const StepResult pen = semi_implicit_step(op, noise, cfg, psi, f, u_n,
                                            zero_increment(noise, cfg.dt));
  CHECK((vi.values - pen.u_next.values).abs().maxCoeff() < 1e-10);
}

TEST_CASE("cross-solver oracle: penalized step with tiny epsilon matches the VI step") {
  const Grid g = build_grid(1, 16);
  const OperatorSpec op{2.0, 0.0, 0.0, 0.0};
  const NoiseSpec noise{NoiseKind::Scalar, 0.0, 1};
  const Field psi = make_field(g, 0.0);
  const Field f = make_field(g, -2.0);
  StepConfig cfg;
  cfg.epsilon = 1e-8;

  const Field u_n = random_above(g, psi, 77, 0);
  const Field vi = vi_reference_step(op, cfg, psi, f, u_n, make_field(g, 0.0));
  const StepResult pen =
      semi_implicit_step(op, noise, cfg, psi, f, u_n, zero_increment(noise, cfg.dt));
  CHECK((vi.values - pen.u_next.values).abs().maxCoeff() < 1e-5);

  // complementarity of the VI iterate
  const Vec fr = vi.values + cfg.dt * (apply_A(op, vi).values) - (u_n.values + cfg.dt * f.values);
  CHECK((vi.values - psi.values).min(fr).abs().maxCoeff() < 1e-9);
}

TEST_CASE("vi and penalized steps agree for the singular exponent") {
  const Grid g = build_grid(1, 12);
  const OperatorSpec op{1.5, 0.0, 0.0, 1e-8};
  const NoiseSpec noise{NoiseKind::Scalar, 0.0, 1};
  const Field psi = make_field(g, 0.0);
  const Field f = make_field(g, -1.0);
  StepConfig cfg;
  cfg.q_tilde = 1.5;
  cfg.epsilon = 1e-8;

  const Field u_n = random_above(g, psi, 78, 1);
  const Field vi = vi_reference_step(op, cfg, psi, f, u_n, make_field(g, 0.0));
  const StepResult pen =
      semi_implicit_step(op, noise, cfg, psi, f, u_n, zero_increment(noise, cfg.dt));
  CHECK((vi.values - pen.u_next.values).abs().maxCoeff() < 1e-4);
}

TEST_CASE("multiplier extraction formula and sign") {
  const Grid g = build_grid(1, 4);
  StepConfig cfg;
  cfg.epsilon = 1e-3;
  Field psi = make_field(g, 0.0);
  Field u = make_field(g, 0.0);
  u.values[1] = -1e-3;  // gap 1e-3 at one node
  const Field k = extract_multiplier(cfg, psi, u);
  CHECK(k.values[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(k.values[0] == 0.0);
  CHECK(k.values.maxCoeff() <= 0.0);

  Field above = make_field(g, 0.5);
  CHECK(extract_multiplier(cfg, psi, above).values.abs().maxCoeff() == 0.0);
}

TEST_CASE("complementarity smallness of the penalized multiplier") {
  const Grid g = build_grid(1, 16);
  const OperatorSpec op{2.0, 0.0, 0.0, 0.0};
  const NoiseSpec noise{NoiseKind::Scalar, 0.0, 1};
  const Field psi = make_field(g, 0.0);
  const Field f = make_field(g, -1.0);
  const Field u_n = make_field(g, 0.0);
  double prev_mag = 0.0;
  bool first = true;
  for (double eps : {1e-3, 1e-4, 1e-5, 1e-6}) {
    StepConfig cfg;
    cfg.epsilon = eps;
    const StepResult res =
        semi_implicit_step(op, noise, cfg, psi, f, u_n, zero_increment(noise, cfg.dt));
    const Field minus_k{g, Vec(-res.multiplier.values)};
    const Field gap{g, Vec(res.u_next.values - psi.values)};
    const double mag = std::abs(inner_H(minus_k, gap));
    CHECK(mag <= 2.0 * eps);  // epsilon-scale smallness
    if (!first) CHECK(mag <= prev_mag * 1.05);
    prev_mag = mag;
    first = false;
  }
}

TEST_CASE("comparison principle in the zero-noise case") {
  const Grid g = build_grid(1, 12);
  const NoiseSpec noise{NoiseKind::Scalar, 0.0, 1};
  const Field psi = make_field(g, 0.0);
  const Field f = sample(g, [](double x) { return std::sin(x); });
  for (double p : {1.5, 2.0, 3.0}) {
    const OperatorSpec op{p, 0.5, 0.0, p < 2.0 ? 1e-8 : 0.0};
    StepConfig cfg;
    cfg.q_tilde = op.q_tilde();
    for (int t = 0; t < 20; ++t) {
      const Field lo = random_above(g, psi, 91, 2 * t);
      Field hi = lo;
      for (Eigen::Index i = 0; i < hi.values.size(); ++i) {
        hi.values[i] += std::abs(rng::normal(91, 2 * t + 1, static_cast<std::uint64_t>(i), 13));
      }
      const Field a =
          semi_implicit_step(op, noise, cfg, psi, f, hi, zero_increment(noise, cfg.dt)).u_next;
      const Field b =
          semi_implicit_step(op, noise, cfg, psi, f, lo, zero_increment(noise, cfg.dt)).u_next;
      CHECK((a.values - b.values).minCoeff() >= -1e-9);
    }
  }
}

TEST_CASE("penalty consistency: errors against the VI path shrink with epsilon") {
  const Grid g = build_grid(1, 16);
  const OperatorSpec op{2.0, 0.0, 0.0, 0.0};
  const NoiseSpec noise{NoiseKind::Scalar, 0.5, 1};
  const Field psi = make_field(g, 0.0);
  const Field f = make_field(g, -1.0);
  const Field u0 = sample(g, [](double x) { return x * (1.0 - x); });
  StepConfig cfg;
  cfg.dt = 0.01;
  const int n_steps = 20;
  const std::uint64_t seed = 2718;

  // shared-noise VI reference path
  std::vector<Vec> ref;
  Field uref = u0;
  ref.push_back(uref.values);
  for (int k = 0; k < n_steps; ++k) {
    const NoiseIncrement inc = sample_increment(noise, cfg.dt, RngStream{seed, 0, static_cast<std::uint64_t>(k)});
    const Field nt = apply_G(noise, uref, psi, inc);
    uref = vi_reference_step(op, cfg, psi, f, uref, nt);
    ref.push_back(uref.values);
  }

  double prev = 0.0;
  bool first = true;
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8}) {
    StepConfig c = cfg;
    c.epsilon = eps;
    Field u = u0;
    for (int k = 0; k < n_steps; ++k) {
      const NoiseIncrement inc = sample_increment(noise, c.dt, RngStream{seed, 0, static_cast<std::uint64_t>(k)});
      u = semi_implicit_step(op, noise, c, psi, f, u, inc).u_next;
    }
    const double err = norm_H(Field{g, Vec(u.values - ref.back())});
    if (!first) CHECK(err <= prev * 1.05);
    prev = err;
    first = false;
  }
}

TEST_CASE("constraint violation bound at epsilon = 1e-6") {
  const Grid g = build_grid(1, 64);
  const OperatorSpec op{2.0, 0.0, 0.0, 0.0};
  const NoiseSpec noise{NoiseKind::Scalar, 0.5, 1};
  const Field psi = make_field(g, 0.0);
  const Field f = make_field(g, -1.0);
  const Field u0 = sample(g, [](double x) { return x * (1.0 - x); });
  StepConfig cfg;
  cfg.epsilon = 1e-6;
  Field u = u0;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const NoiseIncrement inc = sample_increment(noise, cfg.dt, RngStream{3, 0, static_cast<std::uint64_t>(k)});
    u = semi_implicit_step(op, noise, cfg, psi, f, u, inc).u_next;
    worst = std::max(worst, (psi.values - u.values).maxCoeff());
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("simulate_trajectory basics") {
  const Preset pre = preset("stationary");
  const ProblemSpec problem = build_problem(pre);

  const Trajectory empty = simulate_trajectory(problem, pre.cfg, 0.0, 0, 5);
  CHECK(empty.times.size() == 1);
  CHECK((empty.states[0].values - problem.u0.values).abs().maxCoeff() == 0.0);

  const Trajectory t1 = simulate_trajectory(problem, pre.cfg, 0.5, 3, 11, 5);
  const Trajectory t2 = simulate_trajectory(problem, pre.cfg, 0.5, 3, 11, 5);
  CHECK(t1.times.size() == t2.times.size());
  for (std::size_t s = 0; s < t1.states.size(); ++s) {
    CHECK((t1.states[s].values - t2.states[s].values).abs().maxCoeff() == 0.0);
  }

  // stationary preset: constant trajectory equal to psi
  for (const Field& st : t1.states) {
    CHECK((st.values - problem.psi.values).abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("dt-halving is Cauchy in the zero-noise limit") {
  Preset pre = preset("example-p3-unique");
  pre.n = 16;
  pre.noise.c = 0.0;
  pre.u0_spec = "psi-plus:1";
  const ProblemSpec problem = build_problem(pre);
  double prev_diff = 0.0;
  bool have_diff = false;
  Vec prev_final;
  bool have_final = false;
  for (double dt : {0.04, 0.02, 0.01, 0.005}) {
    StepConfig cfg = pre.cfg;
    cfg.dt = dt;
    const Trajectory t = simulate_trajectory(problem, cfg, 1.0, 0, 0, 1000000);
    const Vec final = t.states.back().values;
    if (have_final) {
      const double diff = std::sqrt((final - prev_final).square().sum() * problem.grid.h);
      if (have_diff) CHECK(diff < prev_diff);
      prev_diff = diff;
      have_diff = true;
    }
    prev_final = final;
    have_final = true;
  }
}

TEST_CASE("newton failure surfaces as a solver error") {
  const Grid g = build_grid(1, 8);
  const OperatorSpec op{3.0, 0.0, 0.0, 0.0};
  const NoiseSpec noise{NoiseKind::Scalar, 0.0, 1};
  const Field psi = make_field(g, -1e9);
  const Field f = make_field(g, 0.0);
  StepConfig cfg;
  cfg.dt = 10.0;
  cfg.newton_max_iters = 1;
  cfg.newton_tol = 1e-14;
  const Field u_n = make_field(g, 50.0);
  CHECK_THROWS_AS(
      semi_implicit_step(op, noise, cfg, psi, f, u_n, zero_increment(noise, cfg.dt)),
      SolverError);
}

TEST_CASE("problem validation enforces the initial constraint") {
  Preset pre = preset("example-p3");
  pre.u0_spec = "const:-1";  // below psi = 0
  CHECK_THROWS_AS(build_problem(pre), ValidationError);
}

TEST_CASE("2D stepping: penalized and VI solves agree and respect the constraint") {
  const Grid g = build_grid(2, 8);
  const OperatorSpec op{2.0, 0.0, 0.0, 0.0};
  const NoiseSpec noise{NoiseKind::Scalar, 0.0, 1};
  const Field psi = make_field(g, 0.0);
  const Field f = make_field(g, -2.0);
  const Field u0 = sample(g, [](double x, double y) {
    return 0.5 * std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
  });
  StepConfig cfg;
  cfg.epsilon = 1e-8;

  const Field vi = vi_reference_step(op, cfg, psi, f, u0, make_field(g, 0.0));
  const StepResult pen =
      semi_implicit_step(op, noise, cfg, psi, f, u0, zero_increment(noise, cfg.dt));
  CHECK((vi.values - pen.u_next.values).abs().maxCoeff() < 1e-5);
  CHECK(vi.values.minCoeff() >= 0.0);
  CHECK((psi.values - pen.u_next.values).maxCoeff() < 1e-6);

  // nonlinear 2D drift also steps cleanly
  const OperatorSpec op3{3.0, 1.0, 0.0, 0.0};
  StepConfig c3;
  const StepResult r3 =
      semi_implicit_step(op3, noise, c3, psi, f, u0, zero_increment(noise, c3.dt));
  CHECK(r3.residual <= c3.newton_tol);
}

TEST_CASE("2D trajectory with multimode noise stays finite and deterministic") {
  Preset pre = preset("example-p2-unique");
  pre.dim = 2;
  pre.n = 6;
  pre.noise = NoiseSpec{NoiseKind::MultiMode, 1.0, 8, 1.0};
  const ProblemSpec problem = build_problem(pre);
  const Trajectory t1 = simulate_trajectory(problem, pre.cfg, 0.2, 1, 99, 4);
  const Trajectory t2 = simulate_trajectory(problem, pre.cfg, 0.2, 1, 99, 4);
  for (std::size_t s = 0; s < t1.states.size(); ++s) {
    CHECK(t1.states[s].values.isFinite().all());
    CHECK((t1.states[s].values - t2.states[s].values).abs().maxCoeff() == 0.0);
  }
  // a different trajectory id gives a different path
  const Trajectory t3 = simulate_trajectory(problem, pre.cfg, 0.2, 2, 99, 4);
  CHECK((t1.states.back().values - t3.states.back().values).abs().maxCoeff() > 0.0);
}

TEST_CASE("bounded noise clamps the diffusion factor along a path") {
  Preset pre = preset("example-p3");
  pre.n = 16;
  pre.noise = NoiseSpec{NoiseKind::BoundedMultiMode, 1.0, 4, 1.0, 0.2};
  const ProblemSpec problem = build_problem(pre);
  const Trajectory t = simulate_trajectory(problem, pre.cfg, 0.5, 0, 7, 1);
  for (const Field& st : t.states) CHECK(st.values.isFinite().all());
}
