#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "stobs/grid.hpp"
#include "stobs/rng.hpp"

using namespace stobs;

namespace {

Field random_field(const Grid& g, std::uint64_t seed, std::uint64_t trial = 0) {
  Vec v(g.dof());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = rng::normal(seed, trial, static_cast<std::uint64_t>(i), 99);
  }
  return Field{g, std::move(v)};
}

}  // namespace

TEST_CASE("build_grid spacing and dof") {
  const Grid g1 = build_grid(1, 3);
  CHECK(g1.h == doctest::Approx(0.25));
  CHECK(g1.dof() == 3);

  const Grid g2 = build_grid(2, 3);
  CHECK(g2.h == doctest::Approx(0.25));
  CHECK(g2.dof() == 9);

  const Grid g3 = build_grid(1, 63);
  CHECK(g3.h == doctest::Approx(1.0 / 64.0));
  CHECK(g3.dof() == 63);

  CHECK(g1.h * (g1.n + 1) == doctest::Approx(1.0));

  CHECK_THROWS_AS(build_grid(3, 8), ValidationError);
  CHECK_THROWS_AS(build_grid(0, 8), ValidationError);
  CHECK_THROWS_AS(build_grid(1, 1), ValidationError);
}

TEST_CASE("norm_H on small fields") {
  const Grid g{1, 3, 0.25};
  CHECK(norm_H(make_field(g, 0.0)) == 0.0);

  Field u = make_field(g, 1.0);
  CHECK(norm_H(u) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));

  u.values << 2.0, 0.0, 0.0;
  CHECK(norm_H(u) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("inner_H is the polarization of norm_H") {
  const Grid g{1, 2, 1.0 / 3.0};
  Field u = make_field(g, 0.0);
  Field v = make_field(g, 0.0);
  u.values << 1.0, 2.0;
  v.values << 3.0, -1.0;
  CHECK(inner_H(u, v) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(inner_H(make_field(g, 0.0), v) == 0.0);
  CHECK(inner_H(u, u) == doctest::Approx(norm_H(u) * norm_H(u)).epsilon(1e-12));

  const Grid other{1, 3, 0.25};
  CHECK_THROWS_AS(inner_H(u, make_field(other, 0.0)), GridMismatch);
}

TEST_CASE("norm_Vp with boundary edges") {
  const Grid g{1, 1, 0.5};
  Field u = make_field(g, 1.0);
  CHECK(norm_Vp(u, 2.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(norm_Vp(u, 3.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(norm_Vp(make_field(g, 0.0), 2.0) == 0.0);
  CHECK_THROWS_AS(norm_Vp(u, 1.0), ValidationError);
  CHECK_THROWS_AS(norm_Vp(u, 0.5), ValidationError);
}

TEST_CASE("norm axioms on random pairs") {
  const Grid g = build_grid(1, 17);
  for (int t = 0; t < 1000; ++t) {
    const Field u = random_field(g, 7, 2 * t);
    const Field v = random_field(g, 7, 2 * t + 1);
    for (double p : {2.0, 3.0}) {
      const double nu = norm_Vp(u, p);
      const double nv = norm_Vp(v, p);
      Field sum{g, Vec(u.values + v.values)};
      CHECK(norm_Vp(sum, p) <= (nu + nv) * (1.0 + 1e-12));
      Field su{g, Vec(2.5 * u.values)};
      CHECK(norm_Vp(su, p) == doctest::Approx(2.5 * nu).epsilon(1e-12));
    }
    const double hu = norm_H(u);
    const double hv = norm_H(v);
    Field sum{g, Vec(u.values + v.values)};
    CHECK(norm_H(sum) <= (hu + hv) * (1.0 + 1e-12));
  }
}

TEST_CASE("poincare constant: 1-dof grid is exhaustive") {
  const Grid g{1, 1, 0.5};
  CHECK(poincare_embedding_constant(g) == doctest::Approx(0.125).epsilon(1e-12));
  // the single basis field realizes the ratio
  Field u = make_field(g, 1.0);
  const double ratio = std::pow(norm_H(u) / norm_Vp(u, 2.0), 2);
  CHECK(ratio == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("poincare constant attained by first eigenvector and sharp for random fields") {
  for (const Grid& g : {build_grid(1, 24), build_grid(2, 7)}) {
    const double cd = poincare_embedding_constant(g);
    // first Dirichlet eigenvector: product of sin(pi x) factors
    Field v1 = g.dim == 1
                   ? sample(g, [](double x) { return std::sin(std::numbers::pi * x); })
                   : sample(g, [](double x, double y) {
                       return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
                     });
    const double attained = std::pow(norm_H(v1), 2) / std::pow(norm_Vp(v1, 2.0), 2);
    CHECK(attained == doctest::Approx(cd).epsilon(1e-10));
    for (int t = 0; t < 200; ++t) {
      const Field u = random_field(g, 11, t);
      const double lhs = std::pow(norm_H(u), 2);
      const double rhs = cd * std::pow(norm_Vp(u, 2.0), 2);
      CHECK(lhs <= rhs * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("poincare constant converges to 1/pi^2 in 1D") {
  const double cd = poincare_embedding_constant(build_grid(1, 511));
  CHECK(cd == doctest::Approx(1.0 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-4));
}

TEST_CASE("power iteration cross-check of the Poincare eigenvalue") {
  // independent route: inverse-free power iteration on I - s*L reproduces
  // the smallest Laplacian eigenvalue
  const Grid g = build_grid(1, 16);
  const double h2 = g.h * g.h;
  auto lap = [&](const Vec& v) {
    Vec out(v.size());
    for (int i = 0; i < g.n; ++i) {
      const double left = i == 0 ? 0.0 : v[i - 1];
      const double right = i == g.n - 1 ? 0.0 : v[i + 1];
      out[i] = (2.0 * v[i] - left - right) / h2;
    }
    return out;
  };
  const double shift = 1.0 / (8.0 / h2);  // 1/lambda_max bound
  Vec v = Vec::Constant(g.dof(), 1.0);
  double lam = 0.0;
  for (int it = 0; it < 20000; ++it) {
    Vec w = v - shift * lap(v);
    w /= std::sqrt(w.square().sum());
    lam = (w * lap(w)).sum() / (w * w).sum();
    v = w;
  }
  CHECK(1.0 / lam == doctest::Approx(poincare_embedding_constant(g)).epsilon(1e-8));
}

TEST_CASE("norm_Vp is Cauchy under refinement of a smooth function") {
  double prev = 0.0, prev_diff = 0.0;
  bool have_prev = false, have_diff = false;
  for (int n : {8, 16, 32, 64, 128}) {
    const Grid g = build_grid(1, n);
    const Field f = sample(g, [](double x) { return std::sin(std::numbers::pi * x); });
    const double val = norm_Vp(f, 3.0);
    if (have_prev) {
      const double diff = std::abs(val - prev);
      if (have_diff) CHECK(diff < prev_diff);
      prev_diff = diff;
      have_diff = true;
    }
    prev = val;
    have_prev = true;
  }
}

TEST_CASE("field round-trips through CSV and binary") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "stobs_grid_io";
  fs::create_directories(dir);
  for (const Grid& g : {build_grid(1, 9), build_grid(2, 4)}) {
    const Field f = random_field(g, 23, static_cast<std::uint64_t>(g.dim));
    const std::string csv = (dir / "f.csv").string();
    const std::string bin = (dir / "f.bin").string();
    write_field_csv(f, csv);
    write_field_binary(f, bin);
    const Field fc = read_field_csv(csv);
    const Field fb = read_field_binary(bin);
    CHECK(fc.grid == g);
    CHECK(fb.grid == g);
    CHECK((fc.values - f.values).abs().maxCoeff() == 0.0);  // CSV uses exact decimals
    CHECK((fb.values - f.values).abs().maxCoeff() == 0.0);
  }
  fs::remove_all(dir);
}
