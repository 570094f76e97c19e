#include "stobs/operators.hpp"

#include <cmath>
#include <string>

#include "stobs/rng.hpp"

namespace stobs {

void validate(const OperatorSpec& spec) {
  if (!(spec.p > 1.0)) {
    throw ValidationError("OperatorSpec: p must be > 1, got " + std::to_string(spec.p));
  }
  if (spec.delta_reg < 0.0) {
    throw ValidationError("OperatorSpec: delta_reg must be >= 0");
  }
  if (spec.p < 2.0 && spec.delta_reg == 0.0) {
    throw ValidationError(
        "SingularGradient: p < 2 requires delta_reg > 0 (singular flux at zero gradient)");
  }
}

namespace {

/// flux(g) = (g^2 + delta^2)^{(p-2)/2} * g; the edge flux of the regularized
/// p-Dirichlet energy.
inline double flux(double g, double p, double delta) {
  if (delta == 0.0) {
    if (g == 0.0) return 0.0;
    return std::pow(std::abs(g), p - 2.0) * g;
  }
  return std::pow(g * g + delta * delta, 0.5 * (p - 2.0)) * g;
}

}  // namespace

Field apply_A(const OperatorSpec& spec, const Field& u) {
  validate(spec);
  require_finite(u, "apply_A input");
  const Grid& g = u.grid;
  const double inv_h = 1.0 / g.h;
  const double p = spec.p;
  const double delta = spec.delta_reg;
  const auto& v = u.values;
  Vec out = Vec::Zero(g.dof());

  if (g.dim == 1) {
    for (int i = 0; i < g.n; ++i) {
      const double left = (i == 0 ? v[0] : v[i] - v[i - 1]) * inv_h;
      const double right = (i == g.n - 1 ? -v[i] : v[i + 1] - v[i]) * inv_h;
      out[i] = (flux(left, p, delta) - flux(right, p, delta)) * inv_h;
    }
  } else {
    const int n = g.n;
    auto at = [&](int ix, int iy) { return v[static_cast<Eigen::Index>(iy) * n + ix]; };
    for (int iy = 0; iy < n; ++iy) {
      for (int ix = 0; ix < n; ++ix) {
        const double c = at(ix, iy);
        const double gxl = (ix == 0 ? c : c - at(ix - 1, iy)) * inv_h;
        const double gxr = (ix == n - 1 ? -c : at(ix + 1, iy) - c) * inv_h;
        const double gyl = (iy == 0 ? c : c - at(ix, iy - 1)) * inv_h;
        const double gyr = (iy == n - 1 ? -c : at(ix, iy + 1) - c) * inv_h;
        out[static_cast<Eigen::Index>(iy) * n + ix] =
            (flux(gxl, p, delta) - flux(gxr, p, delta) + flux(gyl, p, delta) -
             flux(gyr, p, delta)) *
            inv_h;
      }
    }
  }
  out += spec.kappa * v;
  Field result{g, std::move(out)};
  require_finite(result, "apply_A output");
  return result;
}

double discrete_energy(const OperatorSpec& spec, const Field& u) {
  const Grid& g = u.grid;
  const double p = spec.p;
  const double d2 = spec.delta_reg * spec.delta_reg;
  const double dp = std::pow(spec.delta_reg, p);
  const double inv_h = 1.0 / g.h;
  const auto& v = u.values;
  double acc = 0.0;
  auto add = [&](double diff) { acc += std::pow(diff * diff + d2, 0.5 * p) - dp; };

  if (g.dim == 1) {
    add(v[0] * inv_h);
    for (int i = 1; i < g.n; ++i) add((v[i] - v[i - 1]) * inv_h);
    add(-v[g.n - 1] * inv_h);
  } else {
    const int n = g.n;
    auto at = [&](int ix, int iy) { return v[static_cast<Eigen::Index>(iy) * n + ix]; };
    for (int iy = 0; iy < n; ++iy) {
      add(at(0, iy) * inv_h);
      for (int ix = 1; ix < n; ++ix) add((at(ix, iy) - at(ix - 1, iy)) * inv_h);
      add(-at(n - 1, iy) * inv_h);
    }
    for (int ix = 0; ix < n; ++ix) {
      add(at(ix, 0) * inv_h);
      for (int iy = 1; iy < n; ++iy) add((at(ix, iy) - at(ix, iy - 1)) * inv_h);
      add(-at(ix, n - 1) * inv_h);
    }
  }
  const double hd = std::pow(g.h, g.dim);
  return hd / p * acc + 0.5 * spec.kappa * hd * v.square().sum();
}

double apply_A_energy_gradient_check(const OperatorSpec& spec, const Field& u, double fd_step) {
  const Field a = apply_A(spec, u);
  const double hd = std::pow(u.grid.h, u.grid.dim);
  Field probe = u;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < u.values.size(); ++i) {
    const double saved = probe.values[i];
    probe.values[i] = saved + fd_step;
    const double ep = discrete_energy(spec, probe);
    probe.values[i] = saved - fd_step;
    const double em = discrete_energy(spec, probe);
    probe.values[i] = saved;
    const double grad = (ep - em) / (2.0 * fd_step) / hd;
    worst = std::max(worst, std::abs(grad - a.values[i]));
  }
  return worst;
}

Field penalty_force(const Field& u, const Field& psi, double epsilon, double q_tilde) {
  require_same_grid(u, psi);
  if (!(epsilon > 0.0)) {
    throw ValidationError("InvalidEpsilon: penalty level must be > 0");
  }
  if (!(q_tilde > 1.0 && q_tilde <= 2.0)) {
    throw ValidationError("penalty exponent q_tilde must lie in (1,2]");
  }
  Vec gap = (psi.values - u.values).max(0.0);
  Vec out = q_tilde == 2.0 ? Vec(-gap / epsilon) : Vec(-gap.pow(q_tilde - 1.0) / epsilon);
  return Field{u.grid, std::move(out)};
}

CompatibilityData compute_compatibility(const OperatorSpec& spec, const Field& psi,
                                        const Field& f) {
  require_same_grid(psi, f);
  const Field a_psi = apply_A(spec, psi);
  Vec h = f.values - a_psi.values - spec.gamma * psi.values;
  CompatibilityData out{Field{psi.grid, h}, Field{psi.grid, (-h).max(0.0)},
                        Field{psi.grid, h.max(0.0)}};
  return out;
}

namespace {

// Fuzz fields are drawn at O(h) amplitude so edge gradients are O(1); the
// hypothesis identities are homogeneous in the field scale, and unit-gradient
// samples keep the floating-point wobble of the slack far below tolerance.
Field random_field(const Grid& grid, std::uint64_t seed, std::uint64_t trial,
                   std::uint64_t which) {
  Vec v(grid.dof());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = grid.h * rng::normal(seed, trial, static_cast<std::uint64_t>(i), which);
  }
  return Field{grid, std::move(v)};
}

}  // namespace

TMonotoneCheck check_T_monotone(const OperatorSpec& spec, const Grid& grid, int trials,
                                std::uint64_t rng_seed) {
  if (trials < 1) throw ValidationError("check_T_monotone: trials must be >= 1");
  double min_slack = std::numeric_limits<double>::infinity();
  const double hd = std::pow(grid.h, grid.dim);
  for (int t = 0; t < trials; ++t) {
    const Field v1 = random_field(grid, rng_seed, static_cast<std::uint64_t>(t), 0);
    const Field v2 = random_field(grid, rng_seed, static_cast<std::uint64_t>(t), 1);
    const Vec w = v1.values - v2.values;
    const Vec wp = w.max(0.0);
    const Vec da = apply_A(spec, v1).values - apply_A(spec, v2).values;
    const double slack =
        spec.lambda_T() * hd * (w * wp).sum() + hd * (da * wp).sum();
    min_slack = std::min(min_slack, slack);
  }
  return TMonotoneCheck{min_slack, trials};
}

CoercivityCheck check_coercivity(const OperatorSpec& spec, const Grid& grid, int trials,
                                 std::uint64_t rng_seed) {
  if (trials < 1) throw ValidationError("check_coercivity: trials must be >= 1");
  double min_ratio = std::numeric_limits<double>::infinity();
  double min_slack = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const Field v = random_field(grid, rng_seed, static_cast<std::uint64_t>(t), 2);
    const double vnorm_p = std::pow(norm_Vp(v, spec.p), spec.p);
    if (vnorm_p == 0.0) continue;  // excluded sample
    const double lhs = inner_H(apply_A(spec, v), v) +
                       spec.lambda() * inner_H(v, v) + spec.l1();
    min_ratio = std::min(min_ratio, lhs / vnorm_p);
    min_slack = std::min(min_slack, lhs - spec.alpha() * vnorm_p);
  }
  return CoercivityCheck{min_ratio, min_slack, trials};
}

}  // namespace stobs
