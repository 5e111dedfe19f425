#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace relu_ocp {

// Uniform rectangular grid over (ax,bx) x (ay,by), interior nodes only,
// homogeneous Dirichlet boundary eliminated. Row-major, x fastest.
struct Grid {
  double ax = 0.0, bx = 1.0, ay = 0.0, by = 1.0;
  int nx = 0, ny = 0;

  double hx() const { return (bx - ax) / (nx + 1); }
  double hy() const { return (by - ay) / (ny + 1); }
  int size() const { return nx * ny; }
  int index(int i, int j) const { return j * nx + i; }
  double x(int i) const { return ax + (i + 1) * hx(); }
  double y(int j) const { return ay + (j + 1) * hy(); }

  static Grid square(double a, double b, int n) { return Grid{a, b, a, b, n, n}; }
};

using Field = Eigen::VectorXd;

Field make_field(const Grid& g, const std::function<double(double, double)>& f);

double inner(const Grid& g, const Field& a, const Field& b);
double norm_l2(const Grid& g, const Field& a);
// H1 norm with forward differences, boundary edges against the zero ghost.
double norm_h1(const Grid& g, const Field& a);

void save_csv(const Grid& g, const Field& a, const std::string& path);
std::pair<Grid, Field> load_csv(const std::string& path);

}  // namespace relu_ocp
