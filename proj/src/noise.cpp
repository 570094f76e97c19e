#include "stobs/noise.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "stobs/rng.hpp"

namespace stobs {

void validate(const NoiseSpec& spec) {
  if (spec.modes < 1) throw ValidationError("NoiseSpec: modes must be >= 1");
  if (spec.kind == NoiseKind::Scalar && spec.modes != 1) {
    throw ValidationError("NoiseSpec: Scalar noise has exactly one mode");
  }
  if (!(spec.q_decay > 0.0)) throw ValidationError("NoiseSpec: q_decay must be > 0");
  if (spec.kind == NoiseKind::BoundedMultiMode && !(spec.clip > 0.0)) {
    throw ValidationError("NoiseSpec: BoundedMultiMode requires clip > 0");
  }
}

double NoiseSpec::q_k(int k) const {
  if (kind == NoiseKind::Scalar) return 1.0;
  return std::pow(static_cast<double>(k), -(2.0 + q_decay));
}

double NoiseSpec::trace_Q() const {
  double acc = 0.0;
  for (int k = 1; k <= modes; ++k) acc += q_k(k);
  return acc;
}

double NoiseSpec::L_G() const { return c * c * trace_Q(); }

double NoiseSpec::Kbold(const Grid& grid) const {
  if (kind != NoiseKind::BoundedMultiMode) return std::numeric_limits<double>::infinity();
  const double measure = std::pow(grid.h, grid.dim) * static_cast<double>(grid.dof());
  return c * c * trace_Q() * clip * clip * measure;
}

NoiseIncrement sample_increment(const NoiseSpec& spec, double dt, const RngStream& stream) {
  validate(spec);
  if (!(dt > 0.0)) throw ValidationError("InvalidDt: time step must be > 0");
  const double root_dt = std::sqrt(dt);
  Vec betas(spec.modes);
  for (int k = 0; k < spec.modes; ++k) {
    betas[k] = root_dt * rng::normal(stream.master_seed, stream.trajectory_id,
                                     stream.step_index, static_cast<std::uint64_t>(k));
  }
  return NoiseIncrement{dt, std::move(betas)};
}

namespace {

/// Sine eigenmode index pairs for the 2D tensor basis, ordered by
/// k1^2+k2^2 then k1.
std::vector<std::pair<int, int>> mode_pairs_2d(int count) {
  std::vector<std::pair<int, int>> pairs;
  const int limit = count + 2;
  for (int k1 = 1; k1 <= limit; ++k1)
    for (int k2 = 1; k2 <= limit; ++k2) pairs.emplace_back(k1, k2);
  std::sort(pairs.begin(), pairs.end(), [](auto a, auto b) {
    const int ra = a.first * a.first + a.second * a.second;
    const int rb = b.first * b.first + b.second * b.second;
    return ra != rb ? ra < rb : a < b;
  });
  pairs.resize(static_cast<std::size_t>(count));
  return pairs;
}

}  // namespace

Field apply_G(const NoiseSpec& spec, const Field& u, const Field& psi,
              const NoiseIncrement& inc) {
  validate(spec);
  require_same_grid(u, psi);
  if (inc.betas.size() != spec.modes) {
    throw ValidationError("noise increment mode count does not match spec");
  }
  Vec factor = spec.c * (u.values.max(psi.values) - psi.values);
  if (spec.kind == NoiseKind::BoundedMultiMode) {
    factor = spec.c * (u.values.max(psi.values) - psi.values).min(spec.clip);
  }
  if (spec.kind == NoiseKind::Scalar) {
    return Field{u.grid, Vec(factor * inc.betas[0])};
  }

  const Grid& g = u.grid;
  Vec envelope = Vec::Zero(g.dof());
  if (g.dim == 1) {
    for (int k = 1; k <= spec.modes; ++k) {
      const double w = std::sqrt(spec.q_k(k)) * inc.betas[k - 1];
      for (int i = 0; i < g.n; ++i) {
        envelope[i] += w * std::numbers::sqrt2 * std::sin(k * std::numbers::pi * g.coord(i));
      }
    }
  } else {
    const auto pairs = mode_pairs_2d(spec.modes);
    for (int k = 1; k <= spec.modes; ++k) {
      const double w = std::sqrt(spec.q_k(k)) * inc.betas[k - 1];
      const auto [k1, k2] = pairs[static_cast<std::size_t>(k - 1)];
      for (int iy = 0; iy < g.n; ++iy)
        for (int ix = 0; ix < g.n; ++ix)
          envelope[static_cast<Eigen::Index>(iy) * g.n + ix] +=
              w * 2.0 * std::sin(k1 * std::numbers::pi * g.coord(ix)) *
              std::sin(k2 * std::numbers::pi * g.coord(iy));
    }
  }
  return Field{u.grid, Vec(factor * envelope)};
}

LipschitzCheck empirical_lipschitz(const NoiseSpec& spec, const Field& psi, int trials,
                                   std::uint64_t rng_seed) {
  validate(spec);
  if (trials < 1) throw ValidationError("empirical_lipschitz: trials must be >= 1");
  const Grid& g = psi.grid;
  const double hd = std::pow(g.h, g.dim);
  const double trace = spec.trace_Q();
  auto pointwise_factor = [&](const Vec& v) {
    Vec gap = v.max(psi.values) - psi.values;
    if (spec.kind == NoiseKind::BoundedMultiMode) gap = gap.min(spec.clip);
    return Vec(spec.c * gap);
  };

  double max_ratio = 0.0;
  double max_hs = 0.0;
  for (int t = 0; t < trials; ++t) {
    Vec theta(g.dof()), sigma(g.dof());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      theta[i] = psi.values[i] + rng::normal(rng_seed, static_cast<std::uint64_t>(t),
                                             static_cast<std::uint64_t>(i), 10);
      sigma[i] = psi.values[i] + rng::normal(rng_seed, static_cast<std::uint64_t>(t),
                                             static_cast<std::uint64_t>(i), 11);
    }
    const double denom = hd * (theta - sigma).square().sum();
    if (denom == 0.0) continue;  // skipped sample
    const Vec dg = pointwise_factor(theta) - pointwise_factor(sigma);
    max_ratio = std::max(max_ratio, trace * hd * dg.square().sum() / denom);
    max_hs = std::max(max_hs, trace * hd * pointwise_factor(sigma).square().sum());
  }
  return LipschitzCheck{max_ratio, max_hs, trials};
}

}  // namespace stobs
