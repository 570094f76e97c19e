#include "stobs/grid.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

namespace stobs {

namespace {

std::string format_double(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

Grid build_grid(int dim, int n) {
  if (dim != 1 && dim != 2) {
    throw ValidationError("InvalidDimension: dim must be 1 or 2, got " + std::to_string(dim));
  }
  if (n < 2) {
    throw ValidationError("InvalidResolution: n must be >= 2, got " + std::to_string(n));
  }
  return Grid{dim, n, 1.0 / (n + 1)};
}

Field make_field(const Grid& grid, double value) {
  return Field{grid, Vec::Constant(grid.dof(), value)};
}

Field make_field(const Grid& grid, Vec values) {
  if (values.size() != grid.dof()) {
    throw ValidationError("field size does not match grid dof");
  }
  return Field{grid, std::move(values)};
}

Field sample(const Grid& grid, const std::function<double(double)>& f) {
  if (grid.dim != 1) throw ValidationError("1D sampler used on a 2D grid");
  Vec v(grid.dof());
  for (int i = 0; i < grid.n; ++i) v[i] = f(grid.coord(i));
  return Field{grid, std::move(v)};
}

Field sample(const Grid& grid, const std::function<double(double, double)>& f) {
  if (grid.dim != 2) throw ValidationError("2D sampler used on a 1D grid");
  Vec v(grid.dof());
  for (int iy = 0; iy < grid.n; ++iy)
    for (int ix = 0; ix < grid.n; ++ix)
      v[static_cast<Eigen::Index>(iy) * grid.n + ix] = f(grid.coord(ix), grid.coord(iy));
  return Field{grid, std::move(v)};
}

void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid == b.grid)) throw GridMismatch();
}

void require_finite(const Field& f, const char* label) {
  if (!f.values.isFinite().all()) {
    throw ValidationError(std::string("non-finite field: ") + label);
  }
}

double inner_H(const Field& u, const Field& v) {
  require_same_grid(u, v);
  const double hd = std::pow(u.grid.h, u.grid.dim);
  return hd * (u.values * v.values).sum();
}

double norm_H(const Field& u) { return std::sqrt(inner_H(u, u)); }

namespace {

/// Accumulates sum over all edges of w(|forward difference| / h); covers the
/// edges into the zero boundary layer.
template <class EdgeFn>
void for_each_edge_diff(const Field& u, EdgeFn&& fn) {
  const Grid& g = u.grid;
  const double inv_h = 1.0 / g.h;
  const auto& v = u.values;
  if (g.dim == 1) {
    fn((v[0] - 0.0) * inv_h);
    for (int i = 1; i < g.n; ++i) fn((v[i] - v[i - 1]) * inv_h);
    fn((0.0 - v[g.n - 1]) * inv_h);
    return;
  }
  const int n = g.n;
  auto at = [&](int ix, int iy) { return v[static_cast<Eigen::Index>(iy) * n + ix]; };
  for (int iy = 0; iy < n; ++iy) {
    fn(at(0, iy) * inv_h);
    for (int ix = 1; ix < n; ++ix) fn((at(ix, iy) - at(ix - 1, iy)) * inv_h);
    fn(-at(n - 1, iy) * inv_h);
  }
  for (int ix = 0; ix < n; ++ix) {
    fn(at(ix, 0) * inv_h);
    for (int iy = 1; iy < n; ++iy) fn((at(ix, iy) - at(ix, iy - 1)) * inv_h);
    fn(-at(ix, n - 1) * inv_h);
  }
}

}  // namespace

double norm_Vp(const Field& u, double p) {
  if (!(p > 1.0)) {
    throw ValidationError("InvalidExponent: V-norm needs p > 1, got " + std::to_string(p));
  }
  double acc = 0.0;
  for_each_edge_diff(u, [&](double d) { acc += std::pow(std::abs(d), p); });
  const double hd = std::pow(u.grid.h, u.grid.dim);
  return std::pow(hd * acc, 1.0 / p);
}

double poincare_embedding_constant(const Grid& grid) {
  const double s = std::sin(0.5 * std::numbers::pi * grid.h) / grid.h;
  const double lambda_axis = 4.0 * s * s;
  return 1.0 / (grid.dim * lambda_axis);
}

void write_field_csv(const Field& f, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  if (f.grid.dim == 1) {
    out << "i,value\n";
    for (int i = 0; i < f.grid.n; ++i) {
      out << (i + 1) << ',' << format_double(f.values[i]) << '\n';
    }
  } else {
    out << "i,j,value\n";
    for (int iy = 0; iy < f.grid.n; ++iy)
      for (int ix = 0; ix < f.grid.n; ++ix)
        out << (ix + 1) << ',' << (iy + 1) << ','
            << format_double(f.values[static_cast<Eigen::Index>(iy) * f.grid.n + ix]) << '\n';
  }
}

Field read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open for reading: " + path);
  std::string header;
  std::getline(in, header);
  int cols = header == "i,value" ? 2 : header == "i,j,value" ? 3 : 0;
  if (cols == 0) throw ValidationError("unrecognized field CSV header: " + header);
  std::vector<double> vals;
  int max_i = 0, max_j = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    int idx[2] = {0, 0};
    for (int c = 0; c < cols - 1; ++c) {
      std::getline(ss, tok, ',');
      idx[c] = std::stoi(tok);
    }
    std::getline(ss, tok, ',');
    vals.push_back(std::stod(tok));
    max_i = std::max(max_i, idx[0]);
    if (cols == 3) max_j = std::max(max_j, idx[1]);
  }
  const int dim = cols == 2 ? 1 : 2;
  const int n = dim == 1 ? max_i : std::max(max_i, max_j);
  Grid g{dim, n, 1.0 / (n + 1)};
  if (static_cast<Eigen::Index>(vals.size()) != g.dof()) {
    throw ValidationError("field CSV row count does not match grid dof");
  }
  Vec v(g.dof());
  for (Eigen::Index i = 0; i < g.dof(); ++i) v[i] = vals[static_cast<std::size_t>(i)];
  return Field{g, std::move(v)};
}

void write_field_binary(const Field& f, const std::string& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  const std::int64_t header[2] = {f.grid.dim, f.grid.n};
  out.write(reinterpret_cast<const char*>(header), 16);
  out.write(reinterpret_cast<const char*>(f.values.data()),
            static_cast<std::streamsize>(sizeof(double)) * f.values.size());
}

Field read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open for reading: " + path);
  std::int64_t header[2];
  in.read(reinterpret_cast<char*>(header), 16);
  if (!in) throw ValidationError("truncated field binary: " + path);
  const int dim = static_cast<int>(header[0]);
  const int n = static_cast<int>(header[1]);
  if ((dim != 1 && dim != 2) || n < 1) throw ValidationError("corrupt field binary header");
  Grid g{dim, n, 1.0 / (n + 1)};
  Vec v(g.dof());
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double)) * v.size());
  if (!in) throw ValidationError("truncated field binary: " + path);
  return Field{g, std::move(v)};
}

}  // namespace stobs
