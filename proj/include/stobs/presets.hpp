#pragma once

#include <string>
#include <vector>

#include "stobs/stepper.hpp"

namespace stobs {

/// A canonical scenario: numeric parameters plus the field recipes, which
/// are materialized onto the final grid after any overrides.
struct Preset {
  std::string name;
  int dim = 1;
  int n = 64;
  OperatorSpec op;
  NoiseSpec noise;
  std::string psi_spec = "zero";
  std::string f_spec = "zero";
  std::string u0_spec = "psi";
  StepConfig cfg;
};

Preset preset(const std::string& name);
std::vector<std::string> preset_names();

/// Field recipes: "zero", "const:<v>", "sin" (sin(x); product in 2D),
/// "sinpi", "parabola" (x(1-x); product in 2D), "psi", "psi-plus:<v>",
/// "balance" (f = A(psi) + gamma*psi, discrete), "file-csv:<path>",
/// "file-bin:<path>".
Field materialize_field(const std::string& spec_str, const Grid& grid, const Field* psi,
                        const OperatorSpec* op);

/// Builds the ProblemSpec from a preset on its default grid.
ProblemSpec build_problem(const Preset& pre);

}  // namespace stobs
