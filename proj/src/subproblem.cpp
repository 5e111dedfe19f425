#include "relu_ocp/subproblem.hpp"

#include <cmath>
#include <stdexcept>

#include "relu_ocp/kernels.hpp"

namespace relu_ocp {

ControlSubproblem::ControlSubproblem(const Grid& g, const ReluNet& net, const Field& y,
                                     double alpha, double kink_tol)
    : grid_(g), net_(&net), y_(y), alpha_(alpha), kink_tol_(kink_tol) {
  if (alpha <= 0.0) throw std::invalid_argument("ControlSubproblem: alpha must be positive");
  if (y.size() != g.size()) throw std::invalid_argument("ControlSubproblem: state size mismatch");
  lambda_min_ = laplacian_lambda_min(g);
  const int n = g.size();
  c0_.resize(n);
  kernels::net_d0(net, y.data(), c0_.data(), n);
  c0_ = c0_.cwiseMax(0.0);
  opc_ = std::make_unique<EllipticOp>(g, c0_);
  K_ = (opc_->matrix() * opc_->matrix()).pruned();
  K_.makeCompressed();
  traces_.resize(n);
  for (int i = 0; i < n; ++i) eval1(net, y(i), &traces_[i]);
}

ControlSubproblem::ControlSubproblem(const Grid& g, const Field& coeff, double alpha)
    : grid_(g), net_(nullptr), alpha_(alpha), kink_tol_(kKinkTol) {
  if (alpha <= 0.0) throw std::invalid_argument("ControlSubproblem: alpha must be positive");
  if (coeff.size() != g.size())
    throw std::invalid_argument("ControlSubproblem: coefficient size mismatch");
  lambda_min_ = laplacian_lambda_min(g);
  c0_ = coeff;
  opc_ = std::make_unique<EllipticOp>(g, c0_);
  K_ = (opc_->matrix() * opc_->matrix()).pruned();
  K_.makeCompressed();
}

Field ControlSubproblem::pi0_apply(const Field& h) { return opc_->solve(h); }

ControlSubproblem::QResult ControlSubproblem::q_apply(const Field& h) {
  QResult r;
  Field s = opc_->solve(h);
  Field t = opc_->solve(s);
  r.Qh = t + alpha_ * h;
  r.qval = inner(grid_, s, s) + alpha_ * inner(grid_, h, h);
  return r;
}

PdasResult ControlSubproblem::pdas_core(const Field& u, const Field& j0prime,
                                        const BoxBounds& bounds, double lambda,
                                        const ActiveSets* warm) {
  const int n = grid_.size();
  PdasResult res;
  res.sets.aplus.assign(n, 0);
  res.sets.aminus.assign(n, 0);
  if (warm && static_cast<int>(warm->aplus.size()) == n) res.sets = *warm;

  Field rhs(n);
  for (res.iters = 1; res.iters <= kMaxIter; ++res.iters) {
    std::vector<std::uint8_t> inactive(n);
    for (int i = 0; i < n; ++i)
      inactive[i] = !(res.sets.aplus[i] || res.sets.aminus[i]);

    if (!pdas_fact_ || pdas_mask_ != inactive) {
      SpMat M = K_;
      for (int i = 0; i < n; ++i)
        if (inactive[i]) M.coeffRef(i, i) += 1.0 / alpha_;
      M.makeCompressed();
      pdas_fact_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>(M);
      pdas_mask_ = inactive;
      if (pdas_fact_->info() != Eigen::Success) {
        res.singular = true;
        pdas_fact_.reset();
        return res;
      }
    }

    for (int i = 0; i < n; ++i) {
      if (res.sets.aplus[i])
        rhs(i) = bounds.ub(i) - u(i);
      else if (res.sets.aminus[i])
        rhs(i) = bounds.ua(i) - u(i);
      else
        rhs(i) = -j0prime(i) / alpha_;
    }
    res.t = pdas_fact_->solve(rhs);

    res.h.resize(n);
    res.mu.resize(n);
    for (int i = 0; i < n; ++i) {
      if (inactive[i]) {
        res.h(i) = -(res.t(i) + j0prime(i)) / alpha_;
        res.mu(i) = 0.0;
      } else {
        res.h(i) = res.sets.aplus[i] ? bounds.ub(i) - u(i) : bounds.ua(i) - u(i);
        res.mu(i) = -res.t(i) - alpha_ * res.h(i) - j0prime(i);
      }
    }

    Field comp(n);
    ActiveSets next;
    next.aplus.assign(n, 0);
    next.aminus.assign(n, 0);
    for (int i = 0; i < n; ++i) {
      const double up = res.mu(i) + lambda * (u(i) + res.h(i) - bounds.ub(i));
      const double lo = res.mu(i) + lambda * (u(i) + res.h(i) - bounds.ua(i));
      comp(i) = res.mu(i) - std::max(0.0, up) - std::min(0.0, lo);
      next.aplus[i] = up > 0.0;
      next.aminus[i] = lo < 0.0;
    }
    res.residual = norm_l2(grid_, comp);
    if (res.residual < kTol || next == res.sets) {
      res.converged = true;
      return res;
    }
    res.sets = next;
  }
  --res.iters;  // cap reached
  return res;
}

PdasResult ControlSubproblem::pdas_linear(const Field& u, const Field& p0, const BoxBounds& bounds,
                                          double lambda, const ActiveSets* warm) {
  Field j0prime = p0 + alpha_ * u;
  return pdas_core(u, j0prime, bounds, lambda, warm);
}

SubproblemSolution ControlSubproblem::solve_kkt(double eps, const Field& u, const Field& g,
                                                const BoxBounds& bounds, double lambda,
                                                const SubproblemSolution* warm) {
  if (eps <= 0.0) throw std::invalid_argument("solve_kkt: eps must be positive");
  if (!net_) throw std::logic_error("solve_kkt: constructed without a network");
  const int n = grid_.size();
  const SmoothingFamily fam = make_smoothing(SmoothingKind::PiecewisePolynomial, eps);

  SubproblemSolution sol;
  sol.d_eps = warm && warm->d_eps.size() == n ? warm->d_eps : Field::Zero(n);
  sol.p_eps = warm && warm->p_eps.size() == n ? warm->p_eps : Field::Zero(n);
  sol.h = warm && warm->h.size() == n ? warm->h : Field::Zero(n);
  sol.mu = Field::Zero(n);
  const ActiveSets* warm_sets = warm && !warm->sets.aplus.empty() ? &warm->sets : nullptr;
  sol.kkt_residual = std::numeric_limits<double>::infinity();

  auto deps_field = [&](const Field& d) {
    Field out(n);
    for (int i = 0; i < n; ++i) out(i) = deps_from_trace(*net_, traces_[i], fam, d(i), kink_tol_);
    return out;
  };
  auto deps_partial_field = [&](const Field& d) {
    Field out(n);
    for (int i = 0; i < n; ++i)
      out(i) = deps_partial_from_trace(*net_, traces_[i], fam, d(i), kink_tol_);
    return out;
  };
  // factor with the clamp fallback when the coefficient makes A indefinite
  auto coeff_solve = [&](Field chi, const Field& rhs, Field& out) -> bool {
    EllipticOp op(grid_, chi);
    if (!op.factorize() || op.indefinite()) {
      chi = chi.cwiseMax(-0.5 * lambda_min_);
      sol.nonmonotone_clamped = true;
      EllipticOp clamped(grid_, chi);
      if (!clamped.factorize() || clamped.indefinite()) return false;
      out = clamped.solve(rhs);
      return out.allFinite();
    }
    out = op.solve(rhs);
    return out.allFinite();
  };

  Field lap(n), r1(n), r2(n);
  PdasResult pd;
  double best = std::numeric_limits<double>::infinity();
  int stall = 0;
  for (sol.outer_iters = 1; sol.outer_iters <= kMaxIter; ++sol.outer_iters) {
    // (i) Newton on the direction equation -Lap d + D_eps(y; d) = h
    double newton_prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < kMaxIter; ++it) {
      kernels::laplacian_apply(grid_, sol.d_eps.data(), lap.data());
      r1 = lap + deps_field(sol.d_eps) - sol.h;
      const double rn = norm_l2(grid_, r1);
      if (rn < kTol || rn >= newton_prev) break;  // done or at the roundoff floor
      newton_prev = rn;
      Field step;
      if (!coeff_solve(deps_partial_field(sol.d_eps), r1, step)) {
        sol.breakdown = true;
        return sol;
      }
      sol.d_eps -= step;
    }
    // linear adjoint with the chain-rule coefficient at the current d
    Field chi = deps_partial_field(sol.d_eps);
    if (!coeff_solve(chi, y_ - g, sol.p_eps)) {
      sol.breakdown = true;
      return sol;
    }

    // (ii) PDAS on the control row Qh + p_eps + mu = -alpha u
    Field j0prime = sol.p_eps + alpha_ * u;
    pd = pdas_core(u, j0prime, bounds, lambda, warm_sets);
    if (pd.singular) {
      sol.breakdown = true;
      return sol;
    }
    sol.h = pd.h;
    sol.mu = pd.mu;
    sol.sets = pd.sets;
    warm_sets = &sol.sets;

    // full-system residual at the current (d, p, h, mu)
    kernels::laplacian_apply(grid_, sol.d_eps.data(), lap.data());
    r1 = lap + deps_field(sol.d_eps) - sol.h;
    kernels::laplacian_apply(grid_, sol.p_eps.data(), lap.data());
    r2 = lap + chi.cwiseProduct(sol.p_eps) - (y_ - g);
    Field r3 = pd.t + alpha_ * sol.h + sol.p_eps + alpha_ * u + sol.mu;
    Field r4(n);
    for (int i = 0; i < n; ++i) {
      const double up = sol.mu(i) + lambda * (u(i) + sol.h(i) - bounds.ub(i));
      const double lo = sol.mu(i) + lambda * (u(i) + sol.h(i) - bounds.ua(i));
      r4(i) = sol.mu(i) - std::max(0.0, up) - std::min(0.0, lo);
    }
    const double n1 = norm_l2(grid_, r1), n2 = norm_l2(grid_, r2);
    const double n3 = norm_l2(grid_, r3), n4 = norm_l2(grid_, r4);
    sol.kkt_residual = std::sqrt(n1 * n1 + n2 * n2 + n3 * n3 + n4 * n4);
    if (sol.kkt_residual < kTol) {
      sol.converged = true;
      return sol;
    }
    if (sol.kkt_residual < 0.5 * best) {
      best = sol.kkt_residual;
      stall = 0;
    } else if (++stall >= 3) {
      return sol;  // roundoff floor; residual reported as is
    }
  }
  --sol.outer_iters;  // cap reached
  return sol;
}

}  // namespace relu_ocp
