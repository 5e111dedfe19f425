#include "relu_ocp/smoothing.hpp"

#include <cmath>
#include <stdexcept>

namespace relu_ocp {

double SmoothingFamily::value(double t) const {
  const double e = epsilon;
  switch (kind) {
    case SmoothingKind::PiecewisePolynomial:
      if (t <= 0.0) return 0.0;
      if (t >= e) return t - 0.5 * e;
      return t * t * t / (e * e) - 0.5 * t * t * t * t / (e * e * e);
    case SmoothingKind::Softplus: {
      const double s = t / e;
      if (s > 35.0) return t;
      if (s < -35.0) return 0.0;
      return e * std::log1p(std::exp(s));
    }
    case SmoothingKind::QuadraticKnee:
      if (t <= -0.5 * e) return 0.0;
      if (t >= 0.5 * e) return t;
      return (t + 0.5 * e) * (t + 0.5 * e) / (2.0 * e);
  }
  return 0.0;
}

double SmoothingFamily::derivative(double t) const {
  const double e = epsilon;
  switch (kind) {
    case SmoothingKind::PiecewisePolynomial:
      if (t <= 0.0) return 0.0;
      if (t >= e) return 1.0;
      return 3.0 * t * t / (e * e) - 2.0 * t * t * t / (e * e * e);
    case SmoothingKind::Softplus: {
      const double s = t / e;
      if (s > 35.0) return 1.0;
      if (s < -35.0) return 0.0;
      return 1.0 / (1.0 + std::exp(-s));
    }
    case SmoothingKind::QuadraticKnee:
      if (t <= -0.5 * e) return 0.0;
      if (t >= 0.5 * e) return 1.0;
      return (t + 0.5 * e) / e;
  }
  return 0.0;
}

SmoothingFamily make_smoothing(SmoothingKind kind, double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("make_smoothing: epsilon must be positive");
  return SmoothingFamily{kind, epsilon};
}

double smoothed_net_eval(const ReluNet& net, const SmoothingFamily& fam, const Eigen::VectorXd& x) {
  if (x.size() != net.input_dim())
    throw std::invalid_argument("smoothed_net_eval: input dimension mismatch");
  Eigen::VectorXd z = x;
  const int L = net.num_layers();
  for (int l = 0; l < L; ++l) {
    Eigen::VectorXd pre = net.layers()[l].W * z + net.layers()[l].b;
    if (l + 1 == L) return pre(0);
    z = pre.unaryExpr([&fam](double t) { return fam.value(t); });
  }
  return 0.0;
}

Eigen::VectorXd smoothed_net_grad(const ReluNet& net, const SmoothingFamily& fam,
                                  const Eigen::VectorXd& x) {
  Eigen::VectorXd z = x;
  const int L = net.num_layers();
  Eigen::MatrixXd M = net.layers()[0].W;
  for (int l = 0; l + 1 < L; ++l) {
    Eigen::VectorXd pre = net.layers()[l].W * z + net.layers()[l].b;
    Eigen::VectorXd dz = pre.unaryExpr([&fam](double t) { return fam.derivative(t); });
    M = net.layers()[l + 1].W * dz.asDiagonal() * M;
    z = pre.unaryExpr([&fam](double t) { return fam.value(t); });
  }
  return M.row(0).transpose();
}

double smoothed_net_eval1(const ReluNet& net, const SmoothingFamily& fam, double y) {
  Eigen::VectorXd x(1);
  x(0) = y;
  return smoothed_net_eval(net, fam, x);
}

double smoothed_net_grad1(const ReluNet& net, const SmoothingFamily& fam, double y) {
  Eigen::VectorXd x(1);
  x(0) = y;
  return smoothed_net_grad(net, fam, x)(net.input_dim() - 1);
}

namespace {

inline int classify(double pre, double tol) {
  if (pre > tol) return 1;
  if (pre < -tol) return -1;
  return 0;
}

}  // namespace

double deps_from_trace(const ReluNet& net, const EvalTrace& trace, const SmoothingFamily& fam,
                       double d0, double kink_tol) {
  const int L = net.num_layers();
  const int n0 = net.input_dim();
  Eigen::VectorXd d = net.layers()[0].W.col(n0 - 1) * d0;
  for (int l = 1; l < L; ++l) {
    const Eigen::VectorXd& pre = trace.pre[l - 1];
    const double tol = kink_tol * (1.0 + pre.cwiseAbs().maxCoeff());
    Eigen::VectorXd out(pre.size());
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
      switch (classify(pre(i), tol)) {
        case 1: out(i) = d(i); break;
        case 0: out(i) = fam.value(d(i)); break;
        default: out(i) = 0.0;
      }
    }
    d = net.layers()[l].W * out;
  }
  return d(0);
}

double deps_partial_from_trace(const ReluNet& net, const EvalTrace& trace,
                               const SmoothingFamily& fam, double d0, double kink_tol) {
  const int L = net.num_layers();
  const int n0 = net.input_dim();
  Eigen::VectorXd d = net.layers()[0].W.col(n0 - 1) * d0;
  Eigen::VectorXd s = net.layers()[0].W.col(n0 - 1);
  for (int l = 1; l < L; ++l) {
    const Eigen::VectorXd& pre = trace.pre[l - 1];
    const double tol = kink_tol * (1.0 + pre.cwiseAbs().maxCoeff());
    Eigen::VectorXd dout(pre.size()), sout(pre.size());
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
      switch (classify(pre(i), tol)) {
        case 1:
          dout(i) = d(i);
          sout(i) = s(i);
          break;
        case 0:
          dout(i) = fam.value(d(i));
          sout(i) = fam.derivative(d(i)) * s(i);
          break;
        default:
          dout(i) = 0.0;
          sout(i) = 0.0;
      }
    }
    d = net.layers()[l].W * dout;
    s = net.layers()[l].W * sout;
  }
  return s(0);
}

double d_eps(const ReluNet& net, const SmoothingFamily& fam, double y, double d,
             const Eigen::VectorXd& frozen, double kink_tol) {
  EvalTrace tr;
  eval(net, make_input(net, y, frozen), &tr);
  return deps_from_trace(net, tr, fam, d, kink_tol);
}

double d_eps_partial(const ReluNet& net, const SmoothingFamily& fam, double y, double d,
                     const Eigen::VectorXd& frozen, double kink_tol) {
  EvalTrace tr;
  eval(net, make_input(net, y, frozen), &tr);
  return deps_partial_from_trace(net, tr, fam, d, kink_tol);
}

std::vector<std::pair<ReluNet, SmoothingFamily>> counterexample_fixtures() {
  // (a) max(t,0) + max(4t,0) - max(2t,0) - max(3t,0) == 0, quadratic knee
  Layer a1{Eigen::MatrixXd(4, 1), Eigen::VectorXd::Zero(4)};
  a1.W << 1.0, 4.0, 2.0, 3.0;
  Layer a2{Eigen::MatrixXd(1, 4), Eigen::VectorXd::Zero(1)};
  a2.W << 1.0, 1.0, -1.0, -1.0;
  ReluNet neta({a1, a2});

  // (b) max(-max(t,0),0) == 0, softplus
  Layer b1{Eigen::MatrixXd(1, 1), Eigen::VectorXd::Zero(1)};
  b1.W << 1.0;
  Layer b2{Eigen::MatrixXd(1, 1), Eigen::VectorXd::Zero(1)};
  b2.W << -1.0;
  Layer b3{Eigen::MatrixXd(1, 1), Eigen::VectorXd::Zero(1)};
  b3.W << 1.0;
  ReluNet netb({b1, b2, b3});

  return {{neta, make_smoothing(SmoothingKind::QuadraticKnee, 0.1)},
          {netb, make_smoothing(SmoothingKind::Softplus, 0.1)}};
}

}  // namespace relu_ocp
