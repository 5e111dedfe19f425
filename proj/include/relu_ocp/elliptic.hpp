#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <optional>

#include "relu_ocp/grid.hpp"
#include "relu_ocp/relu_net.hpp"
#include "relu_ocp/smoothing.hpp"

namespace relu_ocp {

using SpMat = Eigen::SparseMatrix<double>;

SpMat laplacian_matrix(const Grid& g);

// Smallest eigenvalue of the discrete -Lap_h (closed form for the five-point
// stencil); reciprocal square of the discrete Poincare constant.
double laplacian_lambda_min(const Grid& g);

// A = -Lap_h + diag(c), factored lazily.
class EllipticOp {
 public:
  EllipticOp(const Grid& g, const Field& c);

  const Grid& grid() const { return grid_; }
  const Field& coeff() const { return coeff_; }
  const SpMat& matrix() const { return A_; }

  Field apply(const Field& x) const;
  // flags are sticky once the factorization has been computed
  bool factorize();  // false on breakdown
  bool indefinite() const { return indefinite_; }
  bool singular() const { return singular_; }
  Field solve(const Field& rhs);  // factorizes on first use

 private:
  Grid grid_;
  Field coeff_;
  SpMat A_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  bool factorized_ = false, indefinite_ = false, singular_ = false;
};

struct LinSolveResult {
  Field x;
  bool ok = false;
  bool indefinite = false;
};

LinSolveResult solve_linear(EllipticOp& op, const Field& rhs);

enum class NormMode { L2, Hminus1 };

// Cached Poisson factorization for H^{-1} residual norms.
class Poisson {
 public:
  explicit Poisson(const Grid& g);
  Field solve(const Field& rhs) const;
  const Grid& grid() const { return grid_; }

 private:
  Grid grid_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
};

double residual_norm(const Grid& g, const Field& r, NormMode mode, const Poisson* poisson = nullptr);

struct StateSolveOptions {
  double tol = 1e-16;
  int max_iter = 50;
  NormMode norm = NormMode::Hminus1;
  double kink_tol = kKinkTol;
  const SmoothingFamily* smoothing = nullptr;  // if set, solve with N_delta
  const Field* y0 = nullptr;                   // warm start
  const Poisson* poisson = nullptr;            // cached for H^{-1} norms
};

struct StateSolveResult {
  Field y;
  int iters = 0;
  double residual = 0.0;
  bool converged = false;
  bool linear_breakdown = false;
  std::vector<double> residual_history;
};

// Semismooth Newton for -Lap_h y + N(y) = rhs, full steps, generalized
// derivative coefficient clamp(D0(y), 0, inf).
StateSolveResult solve_state(const ReluNet& net, const Grid& g, const Field& rhs,
                             const StateSolveOptions& opt = {});

}  // namespace relu_ocp
