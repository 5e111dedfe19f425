#include "relu_ocp/elliptic.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "relu_ocp/kernels.hpp"

namespace relu_ocp {

SpMat laplacian_matrix(const Grid& g) {
  const int n = g.size();
  const double wx = 1.0 / (g.hx() * g.hx());
  const double wy = 1.0 / (g.hy() * g.hy());
  const double diag = 2.0 * wx + 2.0 * wy;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * n);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int k = g.index(i, j);
      trip.emplace_back(k, k, diag);
      if (i > 0) trip.emplace_back(k, g.index(i - 1, j), -wx);
      if (i + 1 < g.nx) trip.emplace_back(k, g.index(i + 1, j), -wx);
      if (j > 0) trip.emplace_back(k, g.index(i, j - 1), -wy);
      if (j + 1 < g.ny) trip.emplace_back(k, g.index(i, j + 1), -wy);
    }
  }
  SpMat A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

double laplacian_lambda_min(const Grid& g) {
  const double Lx = g.bx - g.ax, Ly = g.by - g.ay;
  const double sx = std::sin(0.5 * M_PI * g.hx() / Lx);
  const double sy = std::sin(0.5 * M_PI * g.hy() / Ly);
  return 4.0 / (g.hx() * g.hx()) * sx * sx + 4.0 / (g.hy() * g.hy()) * sy * sy;
}

EllipticOp::EllipticOp(const Grid& g, const Field& c) : grid_(g), coeff_(c) {
  if (c.size() != g.size()) throw std::invalid_argument("EllipticOp: coefficient size mismatch");
  A_ = laplacian_matrix(g);
  for (int k = 0; k < g.size(); ++k) A_.coeffRef(k, k) += c(k);
  A_.makeCompressed();
}

Field EllipticOp::apply(const Field& x) const {
  Field out(grid_.size());
  kernels::laplacian_apply(grid_, x.data(), out.data());
  out.array() += coeff_.array() * x.array();
  return out;
}

bool EllipticOp::factorize() {
  if (factorized_) return !singular_;
  ldlt_.compute(A_);
  factorized_ = true;
  if (ldlt_.info() != Eigen::Success) {
    singular_ = true;
    return false;
  }
  if (ldlt_.vectorD().minCoeff() <= 0.0) indefinite_ = true;
  return true;
}

Field EllipticOp::solve(const Field& rhs) {
  if (!factorize()) throw std::runtime_error("EllipticOp::solve: factorization breakdown");
  return ldlt_.solve(rhs);
}

LinSolveResult solve_linear(EllipticOp& op, const Field& rhs) {
  LinSolveResult r;
  if (rhs.size() != op.grid().size()) throw std::invalid_argument("solve_linear: rhs size mismatch");
  if (!op.factorize()) {
    r.x = Field::Zero(rhs.size());
    return r;
  }
  r.x = op.solve(rhs);
  r.indefinite = op.indefinite();
  r.ok = r.x.allFinite();
  return r;
}

Poisson::Poisson(const Grid& g) : grid_(g) {
  ldlt_.compute(laplacian_matrix(g));
  if (ldlt_.info() != Eigen::Success) throw std::runtime_error("Poisson: factorization failed");
}

Field Poisson::solve(const Field& rhs) const { return ldlt_.solve(rhs); }

double residual_norm(const Grid& g, const Field& r, NormMode mode, const Poisson* poisson) {
  if (mode == NormMode::L2) return norm_l2(g, r);
  std::optional<Poisson> local;
  if (!poisson) {
    local.emplace(g);
    poisson = &*local;
  }
  Field w = poisson->solve(r);
  return std::sqrt(std::max(0.0, inner(g, w, r)));
}

StateSolveResult solve_state(const ReluNet& net, const Grid& g, const Field& rhs,
                             const StateSolveOptions& opt) {
  const int n = g.size();
  StateSolveResult res;
  res.y = opt.y0 ? *opt.y0 : Field::Zero(n);

  Field nval(n), ncoeff(n), resid(n);
  // 1e-16 is below what double precision can deliver once the data are O(1)
  // or larger; iterate to the roundoff floor of the problem scale and flag
  // convergence relative to it
  const double rhsn = norm_l2(g, rhs);
  const double floor_tol = std::max(opt.tol, 1e-15 * (1.0 + rhsn));
  const double flag_tol = std::max(opt.tol, 1e-11 * (1.0 + rhsn));
  Field y_best = res.y;
  double best = std::numeric_limits<double>::infinity();
  for (res.iters = 0; res.iters <= opt.max_iter; ++res.iters) {
    if (opt.smoothing)
      kernels::net_values_smoothed(net, *opt.smoothing, res.y.data(), nval.data(), n);
    else
      kernels::net_values(net, res.y.data(), nval.data(), n);
    kernels::laplacian_apply(g, res.y.data(), resid.data());
    resid += nval - rhs;
    res.residual = residual_norm(g, resid, opt.norm, opt.poisson);
    res.residual_history.push_back(res.residual);
    if (res.residual < best) {
      best = res.residual;
      y_best = res.y;
    } else if (res.iters > 0) {
      break;  // no further progress, keep the best iterate
    }
    if (res.residual < floor_tol || res.iters == opt.max_iter) break;
    if (opt.smoothing)
      kernels::net_grad_smoothed(net, *opt.smoothing, res.y.data(), ncoeff.data(), n);
    else
      kernels::net_d0(net, res.y.data(), ncoeff.data(), n);
    ncoeff = ncoeff.cwiseMax(0.0);
    EllipticOp J(g, ncoeff);
    auto step = solve_linear(J, resid);
    if (!step.ok) {
      res.linear_breakdown = true;
      break;
    }
    res.y -= step.x;
  }
  res.y = y_best;
  res.residual = best;
  res.converged = !res.linear_breakdown && best < flag_tol;
  return res;
}

}  // namespace relu_ocp
