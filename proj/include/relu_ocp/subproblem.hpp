#pragma once

#include <memory>
#include <vector>

#include "relu_ocp/elliptic.hpp"

namespace relu_ocp {

struct BoxBounds {
  Field ua, ub;
};

struct ActiveSets {
  std::vector<std::uint8_t> aplus, aminus;

  bool operator==(const ActiveSets&) const = default;
};

struct PdasResult {
  Field h, mu, t;
  ActiveSets sets;
  int iters = 0;
  double residual = 0.0;
  bool converged = false;
  bool singular = false;
};

struct SubproblemSolution {
  Field h, d_eps, p_eps, mu;
  ActiveSets sets;
  int outer_iters = 0;
  double kkt_residual = 0.0;
  bool converged = false;
  bool nonmonotone_clamped = false;
  bool breakdown = false;
};

// Descent-direction machinery at a fixed state y: the linearized operator
// with coefficient clamp(D0(y),0), the quadratic form q, the PDAS solver for
// the linear KKT system, and the Newton+PDAS alternation for the smoothed
// nonsmooth KKT system.
class ControlSubproblem {
 public:
  ControlSubproblem(const Grid& g, const ReluNet& net, const Field& y, double alpha,
                    double kink_tol = kKinkTol);
  // Smooth variant with a prescribed zeroth-order coefficient; pdas_linear,
  // pi0_apply and q_apply only (solve_kkt needs the net).
  ControlSubproblem(const Grid& g, const Field& coeff, double alpha);

  const Field& coeff0() const { return c0_; }
  double alpha() const { return alpha_; }

  // d solving (-Lap_h + diag(clamp(D0(y),0))) d = h
  Field pi0_apply(const Field& h);

  struct QResult {
    Field Qh;
    double qval = 0.0;
  };
  // Qh = A^{-2} h + alpha h, qval = <Pi0 h, Pi0 h> + alpha <h, h>
  QResult q_apply(const Field& h);

  // PDAS for the linear KKT system; j0prime = p0 + alpha*u is the reduced
  // gradient at u with p0 the adjoint state.
  PdasResult pdas_linear(const Field& u, const Field& p0, const BoxBounds& bounds, double lambda,
                         const ActiveSets* warm = nullptr);

  // Alternation for the smoothed nonsmooth KKT system: (i) Newton on the
  // direction equation and the linear adjoint, (ii) PDAS on the control row.
  SubproblemSolution solve_kkt(double eps, const Field& u, const Field& g, const BoxBounds& bounds,
                               double lambda, const SubproblemSolution* warm = nullptr);

  static constexpr double kTol = 1e-16;
  static constexpr int kMaxIter = 50;

 private:
  PdasResult pdas_core(const Field& u, const Field& j0prime, const BoxBounds& bounds,
                       double lambda, const ActiveSets* warm);

  Grid grid_;
  const ReluNet* net_;
  Field y_, c0_;
  double alpha_, kink_tol_, lambda_min_;
  std::unique_ptr<EllipticOp> opc_;  // -Lap_h + diag(c0)
  SpMat K_;                          // A^2, explicit 13-point stencil
  std::vector<EvalTrace> traces_;
  // factorization cache for the PDAS reduced matrix, keyed on inactive mask
  std::vector<std::uint8_t> pdas_mask_;
  std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> pdas_fact_;
};

}  // namespace relu_ocp
