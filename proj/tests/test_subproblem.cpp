#include <doctest.h>

#include <cmath>
#include <random>

#include "relu_ocp/kernels.hpp"
#include "relu_ocp/subproblem.hpp"

using namespace relu_ocp;

namespace {

ReluNet max_net() {
  Layer l1{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1)};
  Layer l2{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1)};
  return ReluNet({l1, l2});
}

BoxBounds wide_bounds(int n) {
  return {Field::Constant(n, -1e9), Field::Constant(n, 1e9)};
}

// KKT residual of the control row, assembled independently of the solver
// internals: r = Qh + p0 + alpha (u + h) + mu with Qh from q_apply.
double control_row_residual(ControlSubproblem& sub, const Grid& g, const PdasResult& pd,
                            const Field& u, const Field& p0) {
  Field r = sub.q_apply(pd.h).Qh + p0 + sub.alpha() * u + pd.mu;
  return norm_l2(g, r);
}

}  // namespace

TEST_CASE("scalar problem: PDAS reproduces the closed-form projection") {
  Grid g{0.0, 1.0, 0.0, 1.0, 1, 1};
  REQUIRE(g.size() == 1);
  const double c0 = 3.0, alpha = 0.5;
  ControlSubproblem sub(g, Field::Constant(1, c0), alpha);
  const double a = 4.0 / (g.hx() * g.hx()) + c0;  // scalar operator
  const double q = 1.0 / (a * a) + alpha;

  BoxBounds bounds{Field::Constant(1, -1.0), Field::Constant(1, 2.0)};
  const double u = 0.25;
  for (double p0 : {-20.0, -0.3, 0.0, 0.4, 20.0}) {
    auto pd = sub.pdas_linear(Field::Constant(1, u), Field::Constant(1, p0), bounds, alpha);
    REQUIRE(pd.converged);
    const double j0prime = p0 + alpha * u;
    const double free = -j0prime / q;
    const double expected = std::clamp(free, bounds.ua(0) - u, bounds.ub(0) - u);
    CHECK(pd.h(0) == doctest::Approx(expected).epsilon(1e-12));
    if (expected == bounds.ub(0) - u) CHECK(pd.mu(0) >= -1e-12);
    if (expected == bounds.ua(0) - u) CHECK(pd.mu(0) <= 1e-12);
    if (std::abs(expected - free) < 1e-12) CHECK(std::abs(pd.mu(0)) < 1e-12);
  }
}

TEST_CASE("unconstrained PDAS matches the direct linear solve") {
  Grid g = Grid::square(0.0, 1.0, 15);
  const int n = g.size();
  const double alpha = 1e-2;
  Field c0 = make_field(g, [](double x, double y) { return 0.5 + x * y; });
  ControlSubproblem sub(g, c0, alpha);

  std::mt19937_64 rng(41);
  std::normal_distribution<double> dist(0.0, 1.0);
  Field u(n), p0(n);
  for (int i = 0; i < n; ++i) {
    u(i) = dist(rng);
    p0(i) = dist(rng);
  }
  auto pd = sub.pdas_linear(u, p0, wide_bounds(n), alpha);
  REQUIRE(pd.converged);
  CHECK((pd.mu.cwiseAbs().maxCoeff()) == 0.0);  // no active bounds

  // (I + alpha A^2) h = -A^2 (p0 + alpha u), assembled independently
  SpMat A = laplacian_matrix(g);
  for (int i = 0; i < n; ++i) A.coeffRef(i, i) += c0(i);
  SpMat K = SpMat(A * A);
  SpMat M = alpha * K;
  for (int i = 0; i < n; ++i) M.coeffRef(i, i) += 1.0;
  Eigen::SimplicialLDLT<SpMat> ldlt(M);
  REQUIRE(ldlt.info() == Eigen::Success);
  Field rhs = -(K * (p0 + alpha * u));
  Field h_direct = ldlt.solve(rhs);
  CHECK(norm_l2(g, pd.h - h_direct) < 1e-8 * (1.0 + norm_l2(g, h_direct)));
  CHECK(control_row_residual(sub, g, pd, u, p0) < 1e-10);
}

TEST_CASE("constrained PDAS: feasibility, sign conditions, complementarity, KKT residual") {
  Grid g = Grid::square(0.0, 1.0, 15);
  const int n = g.size();
  const double alpha = 1e-3;
  Field c0 = Field::Ones(n);
  ControlSubproblem sub(g, c0, alpha);

  std::mt19937_64 rng(43);
  std::normal_distribution<double> dist(0.0, 2.0);
  Field u(n), p0(n);
  for (int i = 0; i < n; ++i) {
    u(i) = dist(rng);
    p0(i) = dist(rng);
  }
  // bounds tight enough that both sets activate
  BoxBounds bounds{u.array() - 0.4, u.array() + 0.4};
  auto pd = sub.pdas_linear(u, p0, bounds, alpha);
  REQUIRE(pd.converged);

  int upper = 0, lower = 0;
  for (int i = 0; i < n; ++i) {
    CHECK(u(i) + pd.h(i) >= bounds.ua(i) - 1e-10);
    CHECK(u(i) + pd.h(i) <= bounds.ub(i) + 1e-10);
    if (pd.sets.aplus[i]) {
      CHECK(u(i) + pd.h(i) == doctest::Approx(bounds.ub(i)));
      CHECK(pd.mu(i) >= -1e-10);
      ++upper;
    } else if (pd.sets.aminus[i]) {
      CHECK(u(i) + pd.h(i) == doctest::Approx(bounds.ua(i)));
      CHECK(pd.mu(i) <= 1e-10);
      ++lower;
    } else {
      CHECK(pd.mu(i) == 0.0);
    }
    // complementarity: mu vanishes off the active sets, gap vanishes on them
    const double gap_u = bounds.ub(i) - u(i) - pd.h(i);
    const double gap_l = u(i) + pd.h(i) - bounds.ua(i);
    CHECK(std::abs(std::max(pd.mu(i), 0.0) * gap_u) < 1e-10);
    CHECK(std::abs(std::min(pd.mu(i), 0.0) * gap_l) < 1e-10);
  }
  CHECK(upper > 0);
  CHECK(lower > 0);
  CHECK(control_row_residual(sub, g, pd, u, p0) < 1e-10);
  CHECK(pd.residual < 1e-10);
}

TEST_CASE("q_apply: quadratic form identity and coercivity") {
  Grid g = Grid::square(0.0, 1.0, 11);
  const int n = g.size();
  const double alpha = 0.05;
  ControlSubproblem sub(g, Field::Constant(n, 2.0), alpha);
  std::mt19937_64 rng(47);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Field h(n);
    for (int i = 0; i < n; ++i) h(i) = dist(rng);
    auto qr = sub.q_apply(h);
    CHECK(qr.qval == doctest::Approx(inner(g, qr.Qh, h)).epsilon(1e-12));
    const double hn = norm_l2(g, h);
    CHECK(qr.qval >= alpha * hn * hn);
  }
}

TEST_CASE("pi0_apply solves the linearized state equation") {
  Grid g = Grid::square(0.0, 1.0, 13);
  const int n = g.size();
  Field c0 = make_field(g, [](double x, double y) { return x + 2.0 * y; });
  ControlSubproblem sub(g, c0, 1.0);
  Field h = make_field(g, [](double x, double y) { return std::sin(3.0 * x) * y; });
  Field d = sub.pi0_apply(h);
  Field lap(n);
  kernels::laplacian_apply(g, d.data(), lap.data());
  Field r = lap + c0.cwiseProduct(d) - h;
  CHECK(norm_l2(g, r) < 1e-10 * (1.0 + norm_l2(g, h)));
}

TEST_CASE("net constructor exposes the clamped weak-gradient coefficient") {
  Grid g = Grid::square(0.0, 1.0, 9);
  ReluNet net = ReluNet::from_breakpoints({-2.0, 1.0}, {0.5}, 0.0);
  Field y = make_field(g, [](double x, double) { return x; });
  ControlSubproblem sub(g, net, y, 1e-2);
  for (int i = 0; i < g.size(); ++i) {
    // slope -2 below the breakpoint is clamped to 0; slope 1 above is kept
    const double expect = y(i) > 0.5 ? 1.0 : 0.0;
    CHECK(sub.coeff0()(i) == expect);
  }
}

TEST_CASE("solve_kkt reduces to pdas_linear when the state is far from all kinks") {
  Grid g = Grid::square(0.0, 1.0, 11);
  const int n = g.size();
  const double alpha = 1e-2;
  ReluNet net = max_net();
  Field y = make_field(g, [](double x, double yy) { return 1.0 + x + yy; });  // all active
  ControlSubproblem sub(g, net, y, alpha);
  Field target = make_field(g, [](double x, double yy) { return std::sin(M_PI * x) * yy; });
  Field u = Field::Zero(n);
  BoxBounds bounds{Field::Constant(n, -5.0), Field::Constant(n, 5.0)};

  auto sol = sub.solve_kkt(1e-3, u, target, bounds, alpha);
  CHECK_FALSE(sol.breakdown);
  CHECK(sol.kkt_residual < 1e-10);

  Field p0 = sub.pi0_apply(y - target);  // linear adjoint, c0 = 1 everywhere
  auto pd = sub.pdas_linear(u, p0, bounds, alpha);
  REQUIRE(pd.converged);
  CHECK(norm_l2(g, sol.h - pd.h) < 1e-8 * (1.0 + norm_l2(g, pd.h)));
}

TEST_CASE("solve_kkt on a kinked state: residual floor, warm start, O(eps) direction gaps") {
  Grid g = Grid::square(0.0, 1.0, 11);
  const int n = g.size();
  const double alpha = 1e-2;
  ReluNet net = max_net();
  // y vanishes identically on half the domain: positive-measure kink set
  Field y = make_field(g, [](double x, double) { return std::max(0.0, x - 0.5); });
  ControlSubproblem sub(g, net, y, alpha);
  Field target = make_field(g, [](double x, double yy) { return x - yy; });
  Field u = Field::Zero(n);
  BoxBounds bounds{Field::Constant(n, -3.0), Field::Constant(n, 3.0)};

  auto s1 = sub.solve_kkt(0.1, u, target, bounds, alpha);
  CHECK_FALSE(s1.breakdown);
  CHECK(s1.kkt_residual < 1e-10);

  // warm start from the eps=0.1 solution
  auto s2 = sub.solve_kkt(0.05, u, target, bounds, alpha, &s1);
  auto s2c = sub.solve_kkt(0.05, u, target, bounds, alpha);
  CHECK_FALSE(s2.breakdown);
  CHECK(norm_l2(g, s2.h - s2c.h) < 1e-8 * (1.0 + norm_l2(g, s2c.h)));
  CHECK(s2.outer_iters <= s2c.outer_iters + 1);

  // successive halvings: smoothing perturbs the solution by O(eps) at most
  auto s3 = sub.solve_kkt(0.025, u, target, bounds, alpha, &s2);
  auto s4 = sub.solve_kkt(0.0125, u, target, bounds, alpha, &s3);
  const SubproblemSolution* seq[] = {&s1, &s2, &s3, &s4};
  const double epss[] = {0.1, 0.05, 0.025, 0.0125};
  for (int i = 0; i + 1 < 4; ++i) {
    CHECK(norm_l2(g, seq[i]->d_eps - seq[i + 1]->d_eps) < epss[i]);
    CHECK(norm_l2(g, seq[i]->h - seq[i + 1]->h) < epss[i]);
  }
}

TEST_CASE("constructor rejects bad arguments") {
  Grid g = Grid::square(0.0, 1.0, 5);
  CHECK_THROWS(ControlSubproblem(g, Field::Ones(g.size()), 0.0));
  CHECK_THROWS(ControlSubproblem(g, Field::Ones(3), 1.0));
  ControlSubproblem smooth(g, Field::Ones(g.size()), 1.0);
  CHECK_THROWS(smooth.solve_kkt(1e-2, Field::Zero(g.size()), Field::Zero(g.size()),
                                wide_bounds(g.size()), 1.0));
  ReluNet net = max_net();
  ControlSubproblem sub(g, net, Field::Zero(g.size()), 1.0);
  CHECK_THROWS(sub.solve_kkt(0.0, Field::Zero(g.size()), Field::Zero(g.size()),
                             wide_bounds(g.size()), 1.0));
}
