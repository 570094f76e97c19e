#include "stobs/presets.hpp"

#include <cmath>
#include <numbers>

namespace stobs {

std::vector<std::string> preset_names() {
  return {"stationary",        "example-p3",      "example-p3-unique",
          "example-p2-unique", "example-p15-unique", "ls-regular"};
}

Preset preset(const std::string& name) {
  Preset pre;
  pre.name = name;
  pre.cfg.dt = 0.01;
  pre.cfg.epsilon = 1e-5;

  if (name == "stationary") {
    // Exact fixed point: u0 = psi and f balances the drift, so u stays at psi
    // and the multiplier vanishes (the h^- = 0 case of the LS inequality).
    pre.op = OperatorSpec{3.0, 1.0, 0.0, 0.0};
    pre.noise = NoiseSpec{NoiseKind::Scalar, 1.0, 1};
    pre.psi_spec = "sinpi";
    pre.f_spec = "balance";
    pre.u0_spec = "psi";
  } else if (name == "example-p3") {
    pre.op = OperatorSpec{3.0, 0.0, 0.0, 0.0};
    pre.noise = NoiseSpec{NoiseKind::Scalar, 1.0, 1};
    pre.psi_spec = "zero";
    pre.f_spec = "sin";
    pre.u0_spec = "psi";
  } else if (name == "example-p3-unique") {
    pre.op = OperatorSpec{3.0, 1.0, 0.0, 0.0};
    pre.noise = NoiseSpec{NoiseKind::Scalar, 1.0, 1};
    pre.psi_spec = "zero";
    pre.f_spec = "sin";
    pre.u0_spec = "psi";
  } else if (name == "example-p2-unique") {
    pre.op = OperatorSpec{2.0, 2.0, 0.0, 0.0};
    pre.noise = NoiseSpec{NoiseKind::Scalar, 1.0, 1};
    pre.psi_spec = "zero";
    pre.f_spec = "sin";
    pre.u0_spec = "psi";
  } else if (name == "example-p15-unique") {
    // kappa*u of the worked example is housed as the Lipschitz zero-order
    // term F(u) = gamma*u: for 1 < p < 2 the perturbed operator leaves the
    // plain well-posedness class and runs through the gamma-route.
    pre.op = OperatorSpec{1.5, 0.0, 3.0, 1e-8};
    pre.noise = NoiseSpec{NoiseKind::Scalar, 1.0, 1};
    pre.psi_spec = "zero";
    pre.f_spec = "sin";
    pre.u0_spec = "psi";
  } else if (name == "ls-regular") {
    // h = f - A(0) = -1, so h^- = 1: the regular-data Lewy-Stampacchia case.
    pre.op = OperatorSpec{2.0, 0.0, 0.0, 0.0};
    pre.noise = NoiseSpec{NoiseKind::Scalar, 0.5, 1};
    pre.psi_spec = "zero";
    pre.f_spec = "const:-1";
    pre.u0_spec = "parabola";
  } else {
    throw ValidationError("UnknownPreset: " + name);
  }
  pre.cfg.q_tilde = pre.op.q_tilde();
  return pre;
}

namespace {

double parse_suffix_value(const std::string& s, std::size_t prefix_len) {
  try {
    return std::stod(s.substr(prefix_len));
  } catch (const std::exception&) {
    throw ValidationError("bad numeric suffix in field recipe: " + s);
  }
}

}  // namespace

Field materialize_field(const std::string& spec_str, const Grid& grid, const Field* psi,
                        const OperatorSpec* op) {
  if (spec_str == "zero") return make_field(grid, 0.0);
  if (spec_str.rfind("const:", 0) == 0) {
    return make_field(grid, parse_suffix_value(spec_str, 6));
  }
  if (spec_str == "sin") {
    if (grid.dim == 1) return sample(grid, [](double x) { return std::sin(x); });
    return sample(grid, [](double x, double y) { return std::sin(x) * std::sin(y); });
  }
  if (spec_str == "sinpi") {
    if (grid.dim == 1) {
      return sample(grid, [](double x) { return std::sin(std::numbers::pi * x); });
    }
    return sample(grid, [](double x, double y) {
      return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
    });
  }
  if (spec_str == "parabola") {
    if (grid.dim == 1) return sample(grid, [](double x) { return x * (1.0 - x); });
    return sample(grid, [](double x, double y) {
      return x * (1.0 - x) * y * (1.0 - y);
    });
  }
  if (spec_str == "psi") {
    if (!psi) throw ValidationError("field recipe 'psi' needs the obstacle");
    return *psi;
  }
  if (spec_str.rfind("psi-plus:", 0) == 0) {
    if (!psi) throw ValidationError("field recipe 'psi-plus' needs the obstacle");
    const double v = parse_suffix_value(spec_str, 9);
    return Field{grid, Vec(psi->values + v)};
  }
  if (spec_str == "balance") {
    if (!psi || !op) throw ValidationError("field recipe 'balance' needs psi and the operator");
    const Field a = apply_A(*op, *psi);
    return Field{grid, Vec(a.values + op->gamma * psi->values)};
  }
  if (spec_str.rfind("file-csv:", 0) == 0) {
    Field f = read_field_csv(spec_str.substr(9));
    if (!(f.grid == grid)) throw GridMismatch();
    return f;
  }
  if (spec_str.rfind("file-bin:", 0) == 0) {
    Field f = read_field_binary(spec_str.substr(9));
    if (!(f.grid == grid)) throw GridMismatch();
    return f;
  }
  throw ValidationError("unknown field recipe: " + spec_str);
}

ProblemSpec build_problem(const Preset& pre) {
  const Grid grid = build_grid(pre.dim, pre.n);
  ProblemSpec problem;
  problem.grid = grid;
  problem.op = pre.op;
  problem.noise = pre.noise;
  problem.psi = materialize_field(pre.psi_spec, grid, nullptr, nullptr);
  problem.f = materialize_field(pre.f_spec, grid, &problem.psi, &pre.op);
  problem.u0 = materialize_field(pre.u0_spec, grid, &problem.psi, &pre.op);
  validate(problem);
  return problem;
}

}  // namespace stobs
