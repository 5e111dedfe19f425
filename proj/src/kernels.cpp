#include "relu_ocp/kernels.hpp"

namespace relu_ocp::kernels {

namespace {

inline void lap_row(const Grid& g, const double* x, double* out, int j) {
  const int nx = g.nx;
  const double wx = 1.0 / (g.hx() * g.hx());
  const double wy = 1.0 / (g.hy() * g.hy());
  const double diag = 2.0 * wx + 2.0 * wy;
  const double* row = x + j * nx;
  const double* below = j > 0 ? x + (j - 1) * nx : nullptr;
  const double* above = j + 1 < g.ny ? x + (j + 1) * nx : nullptr;
  double* o = out + j * nx;
  for (int i = 0; i < nx; ++i) {
    double v = diag * row[i];
    if (i > 0) v -= wx * row[i - 1];
    if (i + 1 < nx) v -= wx * row[i + 1];
    if (below) v -= wy * below[i];
    if (above) v -= wy * above[i];
    o[i] = v;
  }
}

}  // namespace

void laplacian_apply(const Grid& g, const double* x, double* out) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < g.ny; ++j) lap_row(g, x, out, j);
}

void laplacian_apply_serial(const Grid& g, const double* x, double* out) {
  for (int j = 0; j < g.ny; ++j) lap_row(g, x, out, j);
}

double dot(const double* a, const double* b, int n) {
  double s = 0.0;
#pragma omp parallel for reduction(+ : s) schedule(static)
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double dot_serial(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void net_values(const ReluNet& net, const double* y, double* out, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] = eval1(net, y[i]);
}

void net_values_serial(const ReluNet& net, const double* y, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = eval1(net, y[i]);
}

void net_d0(const ReluNet& net, const double* y, double* out, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] = weak_gradient_d0_1(net, y[i]);
}

void net_d0_serial(const ReluNet& net, const double* y, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = weak_gradient_d0_1(net, y[i]);
}

void net_values_smoothed(const ReluNet& net, const SmoothingFamily& fam, const double* y,
                         double* out, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] = smoothed_net_eval1(net, fam, y[i]);
}

void net_values_smoothed_serial(const ReluNet& net, const SmoothingFamily& fam, const double* y,
                                double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = smoothed_net_eval1(net, fam, y[i]);
}

void net_grad_smoothed(const ReluNet& net, const SmoothingFamily& fam, const double* y,
                       double* out, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] = smoothed_net_grad1(net, fam, y[i]);
}

void net_grad_smoothed_serial(const ReluNet& net, const SmoothingFamily& fam, const double* y,
                              double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = smoothed_net_grad1(net, fam, y[i]);
}

}  // namespace relu_ocp::kernels
