#include "relu_ocp/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "relu_ocp/kernels.hpp"

namespace relu_ocp {

Field make_field(const Grid& g, const std::function<double(double, double)>& f) {
  Field a(g.size());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) a(g.index(i, j)) = f(g.x(i), g.y(j));
  return a;
}

double inner(const Grid& g, const Field& a, const Field& b) {
  if (a.size() != g.size() || b.size() != g.size())
    throw std::invalid_argument("inner: field size mismatch");
  return g.hx() * g.hy() * kernels::dot(a.data(), b.data(), g.size());
}

double norm_l2(const Grid& g, const Field& a) { return std::sqrt(inner(g, a, a)); }

double norm_h1(const Grid& g, const Field& a) {
  if (a.size() != g.size()) throw std::invalid_argument("norm_h1: field size mismatch");
  const double hx = g.hx(), hy = g.hy();
  double semi = 0.0;
  // x-direction edges, including the two boundary edges against the ghost 0
  for (int j = 0; j < g.ny; ++j) {
    double prev = 0.0;
    for (int i = 0; i < g.nx; ++i) {
      const double v = a(g.index(i, j));
      const double d = (v - prev) / hx;
      semi += d * d;
      prev = v;
    }
    semi += (prev / hx) * (prev / hx);
  }
  // y-direction edges
  for (int i = 0; i < g.nx; ++i) {
    double prev = 0.0;
    for (int j = 0; j < g.ny; ++j) {
      const double v = a(g.index(i, j));
      const double d = (v - prev) / hy;
      semi += d * d;
      prev = v;
    }
    semi += (prev / hy) * (prev / hy);
  }
  semi *= hx * hy;
  const double l2 = norm_l2(g, a);
  return std::sqrt(l2 * l2 + semi);
}

void save_csv(const Grid& g, const Field& a, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_csv: cannot open " + path);
  os.precision(17);
  os << "# ax,bx,ay,by,nx,ny\n";
  os << "# " << g.ax << ',' << g.bx << ',' << g.ay << ',' << g.by << ',' << g.nx << ',' << g.ny
     << "\n";
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (i) os << ',';
      os << a(g.index(i, j));
    }
    os << '\n';
  }
}

std::pair<Grid, Field> load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_csv: cannot open " + path);
  std::string line;
  std::getline(is, line);  // header comment
  std::getline(is, line);
  Grid g;
  if (std::sscanf(line.c_str(), "# %lf,%lf,%lf,%lf,%d,%d", &g.ax, &g.bx, &g.ay, &g.by, &g.nx,
                  &g.ny) != 6)
    throw std::runtime_error("load_csv: malformed grid header");
  Field a(g.size());
  for (int j = 0; j < g.ny; ++j) {
    if (!std::getline(is, line)) throw std::runtime_error("load_csv: truncated file");
    std::stringstream ss(line);
    std::string cell;
    for (int i = 0; i < g.nx; ++i) {
      if (!std::getline(ss, cell, ',')) throw std::runtime_error("load_csv: short row");
      a(g.index(i, j)) = std::stod(cell);
    }
  }
  return {g, std::move(a)};
}

}  // namespace relu_ocp
