#pragma once

#include <string>
#include <vector>

#include "relu_ocp/descent.hpp"

namespace relu_ocp {

enum class TwoLayerKind { Monotone, Nonmonotone };

struct Fixture {
  Problem problem;
  // data-generating control/state for the two-layer fixtures (the descent
  // itself starts from problem.u0)
  Field u0_data, y0_data;
};

// Manufactured problem on (0,1)^2 with nonlinearity max(0, y): the exact
// state is nonpositive, vanishing on the right half, so control, source and
// target follow in closed form from the optimality system.
Fixture fixture_single_max(double dx, double alpha);

ReluNet two_layer_net(TwoLayerKind kind);

// Problem on (0,2)^2 with the two-hidden-layer nets; data built from
// g0 = 200 sin(pi x) sin(pi y) and the clamped control u0, target from the
// discrete optimality system at (u0, y0).
Fixture fixture_two_layer(TwoLayerKind kind, double dx, double alpha);

enum class FixtureFamily { SingleMax, TwoLayerMono, TwoLayerNonmono };

Fixture make_fixture(FixtureFamily family, double dx, double alpha);

struct SweepCell {
  double alpha = 0.0, dx = 0.0;
  double cost = 0.0;
  double rel_err_u = -1.0, rel_err_y = -1.0;  // -1 when no exact solution
  int iterations = 0;
  double cpu_seconds = 0.0;
  double final_h_norm = 0.0;
  bool converged = false;
  bool failed = false;
  RunReport report;
};

struct SweepResult {
  std::string family;
  std::vector<SweepCell> cells;
};

SweepResult run_sweep(FixtureFamily family, const std::vector<double>& alphas,
                      const std::vector<double>& dxs, const DescentConfig& cfg);

// Least-squares slope of log(err) against log(dx); needs >= 3 levels.
double convergence_order(const std::vector<std::pair<double, double>>& dx_err);

std::string emit_string(const SweepResult& result, const std::string& format);
void emit(const SweepResult& result, const std::string& format, const std::string& path);
SweepResult sweep_from_json(const std::string& doc);

}  // namespace relu_ocp
