#include "relu_ocp/relu_net.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace relu_ocp {

ReluNet::ReluNet(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("ReluNet: needs at least one layer");
  for (size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.W.rows() != l.b.size())
      throw std::invalid_argument("ReluNet: bias length does not match weight rows");
    if (i > 0 && layers_[i - 1].W.rows() != l.W.cols())
      throw std::invalid_argument("ReluNet: layer dimensions do not chain");
  }
  if (layers_.back().W.rows() != 1)
    throw std::invalid_argument("ReluNet: output must be scalar");
}

double ReluNet::lipschitz_bound() const {
  double m = 1.0;
  for (const auto& l : layers_) m *= l.W.cwiseAbs().rowwise().sum().maxCoeff();
  return m;
}

ReluNet ReluNet::from_breakpoints(const std::vector<double>& slopes,
                                  const std::vector<double>& breakpoints,
                                  double intercept) {
  const size_t p = slopes.size();
  if (p < 1) throw std::invalid_argument("from_breakpoints: need at least one slope");
  if (breakpoints.size() + 1 != p)
    throw std::invalid_argument("from_breakpoints: need one breakpoint less than slopes");

  std::vector<double> bp, sl{slopes[0]};
  for (size_t i = 0; i + 1 < p; ++i) {
    if (!bp.empty() && breakpoints[i] < bp.back())
      throw std::invalid_argument("from_breakpoints: breakpoints not sorted");
    if (!bp.empty() && breakpoints[i] == bp.back()) {
      sl.back() = slopes[i + 1];  // empty piece, keep the later slope
    } else {
      bp.push_back(breakpoints[i]);
      sl.push_back(slopes[i + 1]);
    }
  }

  const int m = static_cast<int>(bp.size()) + 2;  // neurons: t, -t, t - t_i
  Layer l1{Eigen::MatrixXd(m, 1), Eigen::VectorXd(m)};
  Layer l2{Eigen::MatrixXd(1, m), Eigen::VectorXd(1)};
  l1.W(0, 0) = 1.0;
  l1.b(0) = 0.0;
  l1.W(1, 0) = -1.0;
  l1.b(1) = 0.0;
  l2.W(0, 0) = sl[0];
  l2.W(0, 1) = -sl[0];
  for (size_t i = 0; i < bp.size(); ++i) {
    l1.W(2 + i, 0) = 1.0;
    l1.b(2 + i) = -bp[i];
    l2.W(0, 2 + i) = sl[i + 1] - sl[i];
  }
  l2.b(0) = intercept;
  return ReluNet({std::move(l1), std::move(l2)});
}

std::string ReluNet::to_json_string() const {
  nlohmann::json doc;
  doc["layers"] = nlohmann::json::array();
  for (const auto& l : layers_) {
    nlohmann::json jl;
    jl["rows"] = l.W.rows();
    jl["cols"] = l.W.cols();
    std::vector<double> w(l.W.size());
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) w[r * l.W.cols() + c] = l.W(r, c);
    jl["weights"] = w;
    jl["bias"] = std::vector<double>(l.b.data(), l.b.data() + l.b.size());
    doc["layers"].push_back(std::move(jl));
  }
  return doc.dump(2);
}

ReluNet ReluNet::from_json_string(const std::string& s) {
  auto doc = nlohmann::json::parse(s);
  std::vector<Layer> layers;
  for (const auto& jl : doc.at("layers")) {
    const Eigen::Index rows = jl.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = jl.at("cols").get<Eigen::Index>();
    auto w = jl.at("weights").get<std::vector<double>>();
    auto b = jl.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
        static_cast<Eigen::Index>(b.size()) != rows)
      throw std::invalid_argument("ReluNet: malformed json layer");
    Layer l{Eigen::MatrixXd(rows, cols), Eigen::Map<Eigen::VectorXd>(b.data(), rows)};
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) l.W(r, c) = w[r * cols + c];
    layers.push_back(std::move(l));
  }
  return ReluNet(std::move(layers));
}

double eval(const ReluNet& net, const Eigen::VectorXd& x, EvalTrace* trace) {
  if (x.size() != net.input_dim()) throw std::invalid_argument("eval: input dimension mismatch");
  if (trace) trace->pre.clear();
  Eigen::VectorXd z = x;
  const int L = net.num_layers();
  for (int l = 0; l < L; ++l) {
    Eigen::VectorXd pre = net.layers()[l].W * z + net.layers()[l].b;
    if (l + 1 < L) {
      if (trace) trace->pre.push_back(pre);
      z = pre.cwiseMax(0.0);
    } else {
      if (trace) trace->output = pre(0);
      return pre(0);
    }
  }
  return 0.0;  // unreachable
}

Eigen::VectorXd weak_gradient_d0(const ReluNet& net, const Eigen::VectorXd& x) {
  EvalTrace tr;
  eval(net, x, &tr);
  const int L = net.num_layers();
  Eigen::MatrixXd M = net.layers()[0].W;
  for (int l = 1; l < L; ++l) {
    const Eigen::VectorXd& pre = tr.pre[l - 1];
    // 1_{(0,inf)}(0) = 0 by convention
    Eigen::VectorXd ind = (pre.array() > 0.0).cast<double>();
    M = net.layers()[l].W * ind.asDiagonal() * M;
  }
  return M.row(0).transpose();
}

Eigen::VectorXd make_input(const ReluNet& net, double y, const Eigen::VectorXd& frozen) {
  const int n0 = net.input_dim();
  if (frozen.size() != n0 - 1) throw std::invalid_argument("make_input: frozen size mismatch");
  Eigen::VectorXd x(n0);
  x.head(n0 - 1) = frozen;
  x(n0 - 1) = y;
  return x;
}

double eval1(const ReluNet& net, double y, EvalTrace* trace) {
  Eigen::VectorXd x(1);
  x(0) = y;
  return eval(net, x, trace);
}

double weak_gradient_d0_1(const ReluNet& net, double y) {
  Eigen::VectorXd x(1);
  x(0) = y;
  return weak_gradient_d0(net, x)(net.input_dim() - 1);
}

namespace {

// Three-way pre-activation classification shared by the directional
// derivative recursions: +1 positive, 0 kink, -1 negative.
inline int classify(double pre, double tol) {
  if (pre > tol) return 1;
  if (pre < -tol) return -1;
  return 0;
}

}  // namespace

double dd_from_trace(const ReluNet& net, const EvalTrace& trace, double h, double kink_tol) {
  const int L = net.num_layers();
  const int n0 = net.input_dim();
  Eigen::VectorXd d = net.layers()[0].W.col(n0 - 1) * h;
  for (int l = 1; l < L; ++l) {
    const Eigen::VectorXd& pre = trace.pre[l - 1];
    const double tol = kink_tol * (1.0 + pre.cwiseAbs().maxCoeff());
    Eigen::VectorXd out(pre.size());
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
      switch (classify(pre(i), tol)) {
        case 1: out(i) = d(i); break;
        case 0: out(i) = std::max(0.0, d(i)); break;
        default: out(i) = 0.0;
      }
    }
    d = net.layers()[l].W * out;
  }
  return d(0);
}

double dd_slope_from_trace(const ReluNet& net, const EvalTrace& trace, double h, double kink_tol) {
  const int L = net.num_layers();
  const int n0 = net.input_dim();
  Eigen::VectorXd d = net.layers()[0].W.col(n0 - 1) * h;
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
          dout(i) = std::max(0.0, d(i));
          sout(i) = d(i) > 0.0 ? s(i) : 0.0;
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

double directional_derivative(const ReluNet& net, double y, double h,
                              const Eigen::VectorXd& frozen, double kink_tol) {
  EvalTrace tr;
  eval(net, make_input(net, y, frozen), &tr);
  return dd_from_trace(net, tr, h, kink_tol);
}

double kink_distance(const ReluNet& net, const Eigen::VectorXd& x) {
  EvalTrace tr;
  eval(net, x, &tr);
  double m = std::numeric_limits<double>::infinity();
  for (const auto& pre : tr.pre)
    if (pre.size() > 0) m = std::min(m, pre.cwiseAbs().minCoeff());
  return m;  // +inf for a purely affine net
}

double kink_distance1(const ReluNet& net, double y) {
  Eigen::VectorXd x(1);
  x(0) = y;
  return kink_distance(net, x);
}

}  // namespace relu_ocp
