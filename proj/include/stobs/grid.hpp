#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>

#include "stobs/errors.hpp"

namespace stobs {

using Vec = Eigen::ArrayXd;

/// Uniform tensor grid of interior nodes on (0,1)^dim with a homogeneous
/// Dirichlet boundary (implicit zero ghost layer). h = 1/(n+1).
struct Grid {
  int dim = 1;
  int n = 2;
  double h = 1.0 / 3.0;

  Eigen::Index dof() const {
    return dim == 1 ? n : static_cast<Eigen::Index>(n) * n;
  }
  /// Coordinate of interior node `i` along one axis (1-based stencil: x = (i+1)h).
  double coord(int i) const { return (i + 1) * h; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

Grid build_grid(int dim, int n);

/// Nodal real-valued function on a grid. 2D nodes are flattened row-major
/// with x fastest: index = iy*n + ix.
struct Field {
  Grid grid;
  Vec values;
};

Field make_field(const Grid& grid, double value = 0.0);
Field make_field(const Grid& grid, Vec values);

/// Sample f(x) (1D) or f(x,y) (2D) at the interior nodes.
Field sample(const Grid& grid, const std::function<double(double)>& f);
Field sample(const Grid& grid, const std::function<double(double, double)>& f);

void require_same_grid(const Field& a, const Field& b);
void require_finite(const Field& f, const char* label);

/// Discrete L2 scalar product: h^dim * sum_i u_i v_i.
double inner_H(const Field& u, const Field& v);

/// Discrete L2 norm (the H = L2(D) norm).
double norm_H(const Field& u);

/// Discrete W^{1,p}_0 norm: (h^dim * sum_edges |D_e u|^p)^{1/p}, forward
/// differences over all edges including the ones into the zero boundary layer.
double norm_Vp(const Field& u, double p);

/// Sharp constant C_D with ||u||_H^2 <= C_D ||u||_{V,2}^2 on this grid:
/// the reciprocal of the smallest eigenvalue of the discrete Dirichlet
/// Laplacian, (4/h^2) sin^2(pi h / 2) per axis.
double poincare_embedding_constant(const Grid& grid);

/// CSV exchange format: header line, then one row per node with 1-based
/// interior index coordinates and the value.
void write_field_csv(const Field& f, const std::string& path);
Field read_field_csv(const std::string& path);

/// Flat binary exchange format: 16-byte header (dim, n as little-endian
/// int64) followed by dof() doubles.
void write_field_binary(const Field& f, const std::string& path);
Field read_field_binary(const std::string& path);

}  // namespace stobs
