#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace relu_ocp {

struct Layer {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
};

// Scalar-output feedforward ReLU network. The last layer is affine only;
// all earlier layers are followed by the ReLU activation.
class ReluNet {
 public:
  ReluNet() = default;
  explicit ReluNet(std::vector<Layer> layers);

  int input_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().W.cols()); }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  const std::vector<Layer>& layers() const { return layers_; }

  // Product of the infinity norms of the weight matrices; Lipschitz bound.
  double lipschitz_bound() const;

  // One-hidden-layer net realizing the piecewise affine function with the
  // given slopes between consecutive breakpoints and value intercept at 0
  // on the first piece. Duplicate breakpoints collapse.
  static ReluNet from_breakpoints(const std::vector<double>& slopes,
                                  const std::vector<double>& breakpoints,
                                  double intercept);

  std::string to_json_string() const;
  static ReluNet from_json_string(const std::string& doc);

 private:
  std::vector<Layer> layers_;
};

struct EvalTrace {
  std::vector<Eigen::VectorXd> pre;  // pre-activations of the hidden layers
  double output = 0.0;
};

inline constexpr double kKinkTol = 1e-12;

double eval(const ReluNet& net, const Eigen::VectorXd& x, EvalTrace* trace = nullptr);
Eigen::VectorXd weak_gradient_d0(const ReluNet& net, const Eigen::VectorXd& x);

// Scalar-input conveniences (the solvers use nets with n0 == 1, or frozen
// spatial coordinates with the state in the last slot).
Eigen::VectorXd make_input(const ReluNet& net, double y, const Eigen::VectorXd& frozen);
double eval1(const ReluNet& net, double y, EvalTrace* trace = nullptr);
double weak_gradient_d0_1(const ReluNet& net, double y);

// Hadamard directional derivative in the last input coordinate. Strictly
// positive pre-activations propagate the direction linearly, exact zeros
// contribute max(0, incoming), negative ones contribute 0.
double directional_derivative(const ReluNet& net, double y, double h,
                              const Eigen::VectorXd& frozen = Eigen::VectorXd(),
                              double kink_tol = kKinkTol);

// Minimum |pre-activation| over all hidden neurons; 0 iff the net may be
// nondifferentiable at x.
double kink_distance(const ReluNet& net, const Eigen::VectorXd& x);
double kink_distance1(const ReluNet& net, double y);

// Trace-based cores, for callers that cache per-node traces.
double dd_from_trace(const ReluNet& net, const EvalTrace& trace, double h, double kink_tol = kKinkTol);
// One-sided slope of h -> dd_from_trace at h (the generalized derivative used
// by semismooth Newton on the linearized state equation).
double dd_slope_from_trace(const ReluNet& net, const EvalTrace& trace, double h, double kink_tol = kKinkTol);

}  // namespace relu_ocp
