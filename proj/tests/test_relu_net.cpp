#include <doctest.h>

#include <cmath>
#include <random>

#include "relu_ocp/relu_net.hpp"

using namespace relu_ocp;

namespace {

// Independent oracle for the one-hidden-layer construction: first-piece slope
// plus hinge corrections at each breakpoint.
double hinge_oracle(const std::vector<double>& slopes, const std::vector<double>& bps,
                    double intercept, double t) {
  double v = slopes[0] * t + intercept;
  for (size_t i = 0; i < bps.size(); ++i) v += (slopes[i + 1] - slopes[i]) * std::max(t - bps[i], 0.0);
  return v;
}

ReluNet identity_net() {
  // max(t,0) - max(-t,0) == t, with a genuine kink pair at t = 0
  Layer l1{Eigen::MatrixXd(2, 1), Eigen::VectorXd::Zero(2)};
  l1.W << 1.0, -1.0;
  Layer l2{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Zero(1)};
  l2.W << 1.0, -1.0;
  return ReluNet({l1, l2});
}

}  // namespace

TEST_CASE("constructor validates layer shapes") {
  CHECK_THROWS(ReluNet(std::vector<Layer>{}));
  Layer bad_bias{Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Zero(3)};
  CHECK_THROWS(ReluNet({bad_bias}));
  Layer l1{Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Zero(2)};
  Layer mismatched{Eigen::MatrixXd::Ones(1, 3), Eigen::VectorXd::Zero(1)};
  CHECK_THROWS(ReluNet({l1, mismatched}));
  Layer vector_out{Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Zero(2)};
  CHECK_THROWS(ReluNet({l1, vector_out}));
  Layer ok{Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(1)};
  CHECK_NOTHROW(ReluNet({l1, ok}));
}

TEST_CASE("eval matches a hand-unrolled two-hidden-layer net") {
  // layer 1: a = relu(2t + 1), b = relu(-t); layer 2: c = relu(a - 3b + 0.5);
  // output: 4c - 1
  Layer l1{Eigen::MatrixXd(2, 1), Eigen::VectorXd(2)};
  l1.W << 2.0, -1.0;
  l1.b << 1.0, 0.0;
  Layer l2{Eigen::MatrixXd(1, 2), Eigen::VectorXd(1)};
  l2.W << 1.0, -3.0;
  l2.b << 0.5;
  Layer l3{Eigen::MatrixXd(1, 1), Eigen::VectorXd(1)};
  l3.W << 4.0;
  l3.b << -1.0;
  ReluNet net({l1, l2, l3});
  for (double t : {-2.0, -0.5, 0.0, 0.3, 1.7}) {
    const double a = std::max(2.0 * t + 1.0, 0.0);
    const double b = std::max(-t, 0.0);
    const double c = std::max(a - 3.0 * b + 0.5, 0.0);
    CHECK(eval1(net, t) == doctest::Approx(4.0 * c - 1.0).epsilon(1e-15));
  }
  EvalTrace tr;
  eval1(net, 0.3, &tr);
  REQUIRE(tr.pre.size() == 2);
  CHECK(tr.pre[0](0) == doctest::Approx(1.6));
  CHECK(tr.pre[0](1) == doctest::Approx(-0.3));
  CHECK(tr.pre[1](0) == doctest::Approx(2.1));
  CHECK(tr.output == doctest::Approx(4.0 * 2.1 - 1.0));
}

TEST_CASE("from_breakpoints realizes the piecewise affine oracle") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> slope_dist(0.0, 2.0);
  std::uniform_real_distribution<double> bp_dist(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int pieces = 1 + static_cast<int>(rng() % 6);
    std::vector<double> slopes, bps;
    for (int i = 0; i < pieces; ++i) slopes.push_back(slope_dist(rng));
    for (int i = 0; i + 1 < pieces; ++i) bps.push_back(bp_dist(rng));
    std::sort(bps.begin(), bps.end());
    const double intercept = slope_dist(rng);
    ReluNet net = ReluNet::from_breakpoints(slopes, bps, intercept);
    for (double t = -4.0; t <= 4.0; t += 0.17)
      CHECK(eval1(net, t) ==
            doctest::Approx(hinge_oracle(slopes, bps, intercept, t)).epsilon(1e-12));
  }
}

TEST_CASE("from_breakpoints collapses duplicate breakpoints to the later slope") {
  ReluNet net = ReluNet::from_breakpoints({1.0, -5.0, 2.0}, {0.5, 0.5}, 0.0);
  // the empty middle piece disappears: slope 1 below 0.5, slope 2 above
  CHECK(eval1(net, 0.0) == doctest::Approx(0.0));
  CHECK(eval1(net, 0.4) == doctest::Approx(0.4));
  CHECK(eval1(net, 1.5) == doctest::Approx(0.5 + 2.0 * 1.0));
  CHECK_THROWS(ReluNet::from_breakpoints({1.0, 2.0, 3.0}, {1.0, 0.0}, 0.0));
  CHECK_THROWS(ReluNet::from_breakpoints({1.0, 2.0}, {}, 0.0));
  CHECK_THROWS(ReluNet::from_breakpoints({}, {}, 0.0));
}

TEST_CASE("weak gradient: 1_(0,inf) convention gives slope 0 at kinks") {
  ReluNet id = identity_net();
  CHECK(weak_gradient_d0_1(id, 1.0) == doctest::Approx(1.0));
  CHECK(weak_gradient_d0_1(id, -1.0) == doctest::Approx(1.0));
  // at 0 both pre-activations are exactly 0 and the indicator drops them
  CHECK(weak_gradient_d0_1(id, 0.0) == 0.0);

  ReluNet hinge = ReluNet::from_breakpoints({0.0, 1.0}, {0.25}, 0.0);
  CHECK(weak_gradient_d0_1(hinge, 0.3) == doctest::Approx(1.0));
  CHECK(weak_gradient_d0_1(hinge, 0.2) == doctest::Approx(0.0));
  CHECK(weak_gradient_d0_1(hinge, 0.25) == doctest::Approx(0.0));
}

TEST_CASE("directional derivative: exact kink recursion on the identity net") {
  ReluNet id = identity_net();
  // the net is the identity, so the Hadamard derivative is h in any direction,
  // even at the kink where the weak gradient vanishes
  for (double h : {-2.0, -1e-3, 0.0, 1e-3, 2.0}) {
    CHECK(directional_derivative(id, 0.0, h) == doctest::Approx(h).epsilon(1e-15));
    CHECK(directional_derivative(id, 0.7, h) == doctest::Approx(h).epsilon(1e-15));
  }
}

TEST_CASE("directional derivative equals the one-sided difference quotient") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> dist(0.0, 1.5);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int pieces = 2 + static_cast<int>(rng() % 5);
    std::vector<double> slopes, bps;
    for (int i = 0; i < pieces; ++i) slopes.push_back(dist(rng));
    for (int i = 0; i + 1 < pieces; ++i) bps.push_back(unif(rng));
    std::sort(bps.begin(), bps.end());
    ReluNet net = ReluNet::from_breakpoints(slopes, bps, dist(rng));

    // half the trials sit exactly on a kink
    const double y = (trial % 2 == 0) ? bps[trial % bps.size()] : unif(rng);
    const double h = dist(rng);
    if (h == 0.0) continue;
    const double dd = directional_derivative(net, y, h);
    // piecewise affine: the one-sided quotient is exact for small enough t
    const double t = 1e-9 / std::max(1.0, std::abs(h));
    const double fd = (eval1(net, y + t * h) - eval1(net, y)) / t;
    CHECK(dd == doctest::Approx(fd).epsilon(1e-5));
    ++checked;
  }
  CHECK(checked >= 90);
}

TEST_CASE("directional derivative is positively homogeneous in h") {
  ReluNet net = ReluNet::from_breakpoints({1.0, -2.0, 0.5}, {-0.3, 0.9}, 0.2);
  for (double y : {-0.3, 0.0, 0.9, 1.4}) {
    for (double s : {0.5, 2.0, 100.0}) {
      CHECK(directional_derivative(net, y, s * 1.3) ==
            doctest::Approx(s * directional_derivative(net, y, 1.3)).epsilon(1e-13));
      CHECK(directional_derivative(net, y, -s * 1.3) ==
            doctest::Approx(s * directional_derivative(net, y, -1.3)).epsilon(1e-13));
    }
  }
}

TEST_CASE("kink distance") {
  ReluNet net = ReluNet::from_breakpoints({1.0, 2.0, 3.0}, {-1.0, 1.0}, 0.0);
  CHECK(kink_distance1(net, -1.0) == doctest::Approx(0.0));
  CHECK(kink_distance1(net, 1.0) == doctest::Approx(0.0));
  CHECK(kink_distance1(net, 0.0) == doctest::Approx(0.0));  // the t / -t pair
  CHECK(kink_distance1(net, 0.5) == doctest::Approx(0.5));

  // purely affine net: no hidden layer, never nondifferentiable
  Layer affine{Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Constant(1, 3.0)};
  ReluNet aff({affine});
  CHECK(std::isinf(kink_distance1(aff, 0.0)));
}

TEST_CASE("json round trip preserves evaluation exactly") {
  ReluNet net = ReluNet::from_breakpoints({0.3, -1.7, 2.2, 0.0}, {-2.0, 0.1, 1.9}, -0.4);
  ReluNet back = ReluNet::from_json_string(net.to_json_string());
  REQUIRE(back.num_layers() == net.num_layers());
  for (double t = -3.0; t <= 3.0; t += 0.1) CHECK(eval1(back, t) == eval1(net, t));
  CHECK_THROWS(ReluNet::from_json_string("{\"layers\":[{\"rows\":2,\"cols\":1,"
                                         "\"weights\":[1.0],\"bias\":[0.0,0.0]}]}"));
}

TEST_CASE("lipschitz bound dominates sampled difference quotients") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> slopes{dist(rng), dist(rng), dist(rng)};
    std::vector<double> bps{-0.7, 0.4};
    ReluNet net = ReluNet::from_breakpoints(slopes, bps, dist(rng));
    const double L = net.lipschitz_bound();
    for (int s = 0; s < 50; ++s) {
      const double a = 3.0 * dist(rng), b = 3.0 * dist(rng);
      if (a == b) continue;
      CHECK(std::abs(eval1(net, a) - eval1(net, b)) <= L * std::abs(a - b) + 1e-12);
    }
  }
}

TEST_CASE("make_input freezes leading coordinates") {
  Layer l1{Eigen::MatrixXd(2, 3), Eigen::VectorXd::Zero(2)};
  l1.W << 1.0, 0.0, 2.0, 0.0, 1.0, -1.0;
  Layer l2{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Zero(1)};
  l2.W << 1.0, 1.0;
  ReluNet net({l1, l2});
  Eigen::VectorXd frozen(2);
  frozen << 0.5, -0.25;
  Eigen::VectorXd x = make_input(net, 2.0, frozen);
  CHECK(x(0) == 0.5);
  CHECK(x(1) == -0.25);
  CHECK(x(2) == 2.0);
  CHECK(eval(net, x) == doctest::Approx(std::max(0.5 + 4.0, 0.0) + std::max(-0.25 - 2.0, 0.0)));
  CHECK_THROWS(make_input(net, 2.0, Eigen::VectorXd::Zero(3)));
}
