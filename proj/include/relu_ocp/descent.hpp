#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "relu_ocp/subproblem.hpp"

namespace relu_ocp {

struct Problem {
  std::string name;
  Grid grid;
  ReluNet net;
  BoxBounds bounds;
  double alpha = 1.0;
  Field g;                    // tracking target
  Field f;                    // fixed source, state equation rhs is u + f
  Field u0;                   // initial control
  std::optional<Field> exact_u, exact_y;
};

struct DescentConfig {
  double eta = 1e-16;       // line-search floor parameter
  double tau_min = 1e-16;
  double eps0 = 0.1;
  double delta0 = 0.1;
  double c = 0.6;           // backtracking factor
  double c1 = 0.1;          // eps shrink
  double c2 = 0.1;          // delta shrink
  double tilde_c = 0.5;
  double nu = 0.9;          // Armijo parameter
  double kappa = 1.0;       // merit weight
  double xi = 0.1;          // constraint-violation decay (dormant when Psi = 0)
  double beta = 1.1;        // listed among the reference parameters; consumed by nothing
  double h_stop = 1e-16;
  int max_outer = 200;
  double ns_tol = 1e-9;     // kink-detection tolerance for the nonsmooth-set test
  double kink_tol = kKinkTol;
  int max_eps_shrinks = 30;
  int robustify_budget = 20;
  int stationarity_dirs = 32;
  std::uint64_t seed = 0;
  double lambda = -1.0;     // PDAS lambda; <= 0 means alpha (1e-6 when alpha <= 1e-12)
};

struct IterationRecord {
  int k = 0;
  double cost = 0.0;
  double h_norm = 0.0;
  double tau = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  bool robustified = false;
  double nonsmooth_fraction = 0.0;
  double cpu_time = 0.0;  // seconds spent in this iteration
};

struct RunReport {
  std::vector<IterationRecord> iterations;
  Field u, y, p;
  std::string termination;  // h_stop | stationary | max_outer | eps_shrink_cap | state_failure
  bool converged = false;
  bool stagnation = false;
  bool nonmonotone_clamped = false;
  double final_cost = 0.0;
  double final_h_norm = 0.0;
  double b_stationarity = 0.0;

  std::string to_json_string() const;
  std::string to_csv_string() const;
  // line-delimited iteration log (one json object per line)
  std::string iteration_log() const;
};

struct ObjectiveResult {
  double J = 0.0;
  Field y;
  bool ok = false;
};

ObjectiveResult reduced_objective(const Problem& prob, const Field& u,
                                  const Poisson* poisson = nullptr, const Field* y_warm = nullptr);

// Exact nonsmooth directional derivative of the reduced objective:
// solves -Lap z + N'(y; z) = h by semismooth Newton, returns <y-g, z> + alpha <u, h>.
double reduced_dderiv(const Problem& prob, const Field& u, const Field& y, const Field& h,
                      const Poisson* poisson = nullptr, bool* ok = nullptr);

struct ArmijoResult {
  double tau = 0.0;
  bool accepted = false;
  double J_new = 0.0;
  Field y_new;
};

// Backtracking on the merit function J + kappa*Psi with floor min(tau_min, tilde_c*||h||).
ArmijoResult armijo(const Problem& prob, const Field& u, const Field& h, double J, double dJ,
                    const DescentConfig& cfg, const Poisson* poisson = nullptr,
                    const Field* y_warm = nullptr);

// Budgeted descent on the delta-smoothed problem; returns the new control.
Field robustify(const Problem& prob, const Field& u, double delta, const DescentConfig& cfg,
                const Poisson* poisson = nullptr);

double nonsmooth_fraction(const ReluNet& net, const Field& y, double ns_tol);

// Diagnostic: min of J'(u; h) over sampled unit-norm tangent-cone directions.
double b_stationarity_residual(const Problem& prob, const Field& u, const Field& y, int n_dirs,
                               std::uint64_t seed, const Poisson* poisson = nullptr);

RunReport run(const Problem& prob, const DescentConfig& cfg);

}  // namespace relu_ocp
