#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stobs/noise.hpp"
#include "stobs/rng.hpp"

using namespace stobs;

TEST_CASE("noise spec bookkeeping") {
  NoiseSpec scalar{NoiseKind::Scalar, 2.0, 1};
  CHECK(scalar.trace_Q() == 1.0);
  CHECK(scalar.L_G() == doctest::Approx(4.0));
  CHECK(!std::isfinite(scalar.Kbold(build_grid(1, 8))));

  NoiseSpec mm{NoiseKind::MultiMode, 2.0, 4, 1.0};
  double trace = 0.0;
  for (int k = 1; k <= 4; ++k) trace += std::pow(k, -3.0);
  CHECK(mm.trace_Q() == doctest::Approx(trace).epsilon(1e-15));
  CHECK(mm.L_G() == doctest::Approx(4.0 * trace).epsilon(1e-15));

  NoiseSpec bounded{NoiseKind::BoundedMultiMode, 1.0, 4, 1.0, 0.5};
  CHECK(std::isfinite(bounded.Kbold(build_grid(1, 8))));

  CHECK_THROWS_AS(validate(NoiseSpec{NoiseKind::Scalar, 1.0, 2}), ValidationError);
  CHECK_THROWS_AS(validate(NoiseSpec{NoiseKind::MultiMode, 1.0, 0}), ValidationError);
  CHECK_THROWS_AS(validate(NoiseSpec{NoiseKind::BoundedMultiMode, 1.0, 4, 1.0, 0.0}),
                  ValidationError);
}

TEST_CASE("increments: determinism, scaling, moments") {
  NoiseSpec spec{NoiseKind::MultiMode, 1.0, 4, 1.0};

  const NoiseIncrement a = sample_increment(spec, 1.0, RngStream{123, 7, 5});
  const NoiseIncrement b = sample_increment(spec, 1.0, RngStream{123, 7, 5});
  CHECK((a.betas - b.betas).abs().maxCoeff() == 0.0);

  const NoiseIncrement c = sample_increment(spec, 0.25, RngStream{123, 7, 5});
  CHECK((c.betas - 0.5 * a.betas).abs().maxCoeff() == 0.0);

  const NoiseIncrement d = sample_increment(spec, 1.0, RngStream{123, 7, 6});
  CHECK((a.betas - d.betas).abs().maxCoeff() > 0.0);

  CHECK_THROWS_AS(sample_increment(spec, 0.0, RngStream{1, 0, 0}), ValidationError);

  // Monte Carlo variance of Normal(0, dt=1) draws
  const int reps = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    const NoiseIncrement inc = sample_increment(spec, 1.0, RngStream{99, 0, static_cast<std::uint64_t>(r)});
    for (int k = 0; k < 4; ++k) {
      sum += inc.betas[k];
      sum_sq += inc.betas[k] * inc.betas[k];
    }
  }
  const double n = 4.0 * reps;
  const double var = sum_sq / n - (sum / n) * (sum / n);
  CHECK(var > 0.99);
  CHECK(var < 1.01);
}

TEST_CASE("increment independence: lag-1 autocorrelation") {
  NoiseSpec spec{NoiseKind::Scalar, 1.0, 1};
  const int n = 100000;
  double prev = 0.0, sum = 0.0, sum_sq = 0.0, cross = 0.0;
  for (int k = 0; k < n; ++k) {
    const double z = sample_increment(spec, 1.0, RngStream{2024, 3, static_cast<std::uint64_t>(k)}).betas[0];
    sum += z;
    sum_sq += z * z;
    if (k > 0) cross += z * prev;
    prev = z;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  const double rho = (cross / (n - 1) - mean * mean) / var;
  CHECK(rho > -0.02);
  CHECK(rho < 0.02);
}

TEST_CASE("apply_G vanishes at the obstacle, bitwise") {
  const Grid g = build_grid(1, 8);
  const Field psi = sample(g, [](double x) { return 0.2 * std::sin(std::numbers::pi * x); });
  NoiseSpec spec{NoiseKind::MultiMode, 3.0, 4, 1.0};
  const NoiseIncrement inc = sample_increment(spec, 0.01, RngStream{5, 0, 0});

  CHECK(apply_G(spec, psi, psi, inc).values.abs().maxCoeff() == 0.0);

  // below-psi nodes contribute exactly zero
  Field u = psi;
  u.values[2] -= 1.0;
  u.values[5] += 1.0;
  const Field out = apply_G(spec, u, psi, inc);
  CHECK(out.values[2] == 0.0);
  CHECK(out.values[5] != 0.0);
}

TEST_CASE("apply_G scalar and single-mode hand values") {
  const Grid g = build_grid(1, 3);
  const Field zero = make_field(g, 0.0);
  Field u = make_field(g, 1.0);

  NoiseSpec scalar{NoiseKind::Scalar, 2.0, 1};
  NoiseIncrement inc{1.0, Vec::Constant(1, 0.3)};
  const Field sg = apply_G(scalar, u, zero, inc);
  CHECK((sg.values - 0.6).abs().maxCoeff() < 1e-15);

  // one sine mode with q_1 = 1: c * u * sqrt(2) sin(pi x) * beta
  NoiseSpec mm{NoiseKind::MultiMode, 1.0, 1, 1.0};
  const Field mg = apply_G(mm, u, zero, inc);
  for (int i = 0; i < g.n; ++i) {
    const double expect = 0.3 * std::numbers::sqrt2 * std::sin(std::numbers::pi * g.coord(i));
    CHECK(mg.values[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("empirical Lipschitz ratio stays within L_G") {
  const Grid g = build_grid(1, 12);
  const Field psi = make_field(g, 0.0);

  NoiseSpec scalar{NoiseKind::Scalar, 1.5, 1};
  const LipschitzCheck lc = empirical_lipschitz(scalar, psi, 500, 21);
  CHECK(lc.max_ratio <= scalar.L_G() * (1.0 + 1e-10));

  NoiseSpec mm{NoiseKind::MultiMode, 2.0, 8, 1.0};
  const LipschitzCheck lm = empirical_lipschitz(mm, psi, 500, 22);
  CHECK(lm.max_ratio <= mm.L_G() * (1.0 + 1e-10));

  NoiseSpec bounded{NoiseKind::BoundedMultiMode, 2.0, 8, 1.0, 0.4};
  const LipschitzCheck lb = empirical_lipschitz(bounded, psi, 500, 23);
  CHECK(lb.max_ratio <= bounded.L_G() * (1.0 + 1e-10));
  CHECK(lb.max_hs_norm_sq <= bounded.Kbold(g) * (1.0 + 1e-10));
}

TEST_CASE("scalar factor ratio is exactly c^2 above the obstacle") {
  const Grid g = build_grid(1, 6);
  const Field psi = make_field(g, 0.0);
  NoiseSpec scalar{NoiseKind::Scalar, 1.3, 1};
  // theta, sigma >= 0 = psi: |max(theta,0)-max(sigma,0)| = |theta-sigma|
  Field theta = make_field(g, 0.7);
  Field sigma = make_field(g, 0.1);
  const double hd = g.h;
  const Vec dg = scalar.c * (theta.values - sigma.values);
  const double ratio =
      scalar.trace_Q() * hd * dg.square().sum() /
      (hd * (theta.values - sigma.values).square().sum());
  CHECK(ratio == doctest::Approx(scalar.c * scalar.c).epsilon(1e-14));
}
