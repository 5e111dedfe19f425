#pragma once

#include <utility>
#include <vector>

#include "relu_ocp/relu_net.hpp"

namespace relu_ocp {

enum class SmoothingKind { PiecewisePolynomial, Softplus, QuadraticKnee };

// Canonical smoothing sigma_eps of the ReLU: convex, nondecreasing,
// 0 <= derivative <= 1, converging uniformly to max(0, t) as eps -> 0.
struct SmoothingFamily {
  SmoothingKind kind = SmoothingKind::PiecewisePolynomial;
  double epsilon = 0.1;

  double value(double t) const;
  double derivative(double t) const;
};

SmoothingFamily make_smoothing(SmoothingKind kind, double epsilon);

// Network with sigma replaced by sigma_eps in every hidden layer.
double smoothed_net_eval(const ReluNet& net, const SmoothingFamily& fam, const Eigen::VectorXd& x);
Eigen::VectorXd smoothed_net_grad(const ReluNet& net, const SmoothingFamily& fam, const Eigen::VectorXd& x);
double smoothed_net_eval1(const ReluNet& net, const SmoothingFamily& fam, double y);
double smoothed_net_grad1(const ReluNet& net, const SmoothingFamily& fam, double y);

// Smoothed directional-derivative operator: the directional derivative
// recursion with max(0, .) acting on directions replaced by sigma_eps, the
// pre-activation indicators kept exact.
double d_eps(const ReluNet& net, const SmoothingFamily& fam, double y, double d,
             const Eigen::VectorXd& frozen = Eigen::VectorXd(), double kink_tol = kKinkTol);
// Partial derivative of d_eps with respect to d (chain rule with sigma_eps').
double d_eps_partial(const ReluNet& net, const SmoothingFamily& fam, double y, double d,
                     const Eigen::VectorXd& frozen = Eigen::VectorXd(), double kink_tol = kKinkTol);

// Trace-based cores for callers that cache per-node traces.
double deps_from_trace(const ReluNet& net, const EvalTrace& trace, const SmoothingFamily& fam,
                       double d, double kink_tol = kKinkTol);
double deps_partial_from_trace(const ReluNet& net, const EvalTrace& trace, const SmoothingFamily& fam,
                               double d, double kink_tol = kKinkTol);

// Fixtures for which some canonical smoothing breaks monotonicity of the
// smoothed net even though the exact net is monotone (here identically 0):
// (a) one-hidden-layer cancellation net with the quadratic knee,
// (b) max(-max(t,0),0) with softplus.
std::vector<std::pair<ReluNet, SmoothingFamily>> counterexample_fixtures();

}  // namespace relu_ocp
