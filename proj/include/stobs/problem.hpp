#pragma once

#include "stobs/grid.hpp"
#include "stobs/noise.hpp"
#include "stobs/operators.hpp"

namespace stobs {

/// The full problem tuple (A, G, psi, f, u0) of hypotheses H1-H6 on a fixed grid.
struct ProblemSpec {
  Grid grid;
  OperatorSpec op;
  NoiseSpec noise;
  Field psi;
  Field f;
  Field u0;
};

void validate(const ProblemSpec& p);

}  // namespace stobs
