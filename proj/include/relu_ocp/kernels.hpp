#pragma once

#include "relu_ocp/grid.hpp"
#include "relu_ocp/relu_net.hpp"
#include "relu_ocp/smoothing.hpp"

namespace relu_ocp::kernels {

// Hot loops have an OpenMP version (default entry point) and a serial
// reference implementation used for testing and benchmarking.

// Five-point stencil, ghost values zero: out = -Lap_h x.
void laplacian_apply(const Grid& g, const double* x, double* out);
void laplacian_apply_serial(const Grid& g, const double* x, double* out);

double dot(const double* a, const double* b, int n);
double dot_serial(const double* a, const double* b, int n);

// Pointwise net maps over a field (scalar-input nets).
void net_values(const ReluNet& net, const double* y, double* out, int n);
void net_values_serial(const ReluNet& net, const double* y, double* out, int n);

// Weak gradient D0 at each node.
void net_d0(const ReluNet& net, const double* y, double* out, int n);
void net_d0_serial(const ReluNet& net, const double* y, double* out, int n);

// Smoothed counterparts.
void net_values_smoothed(const ReluNet& net, const SmoothingFamily& fam, const double* y,
                         double* out, int n);
void net_values_smoothed_serial(const ReluNet& net, const SmoothingFamily& fam, const double* y,
                                double* out, int n);
void net_grad_smoothed(const ReluNet& net, const SmoothingFamily& fam, const double* y,
                       double* out, int n);
void net_grad_smoothed_serial(const ReluNet& net, const SmoothingFamily& fam, const double* y,
                              double* out, int n);

}  // namespace relu_ocp::kernels
