#include "relu_ocp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "relu_ocp/kernels.hpp"

namespace relu_ocp {

namespace {

ReluNet max_net() {
  Layer l1{Eigen::MatrixXd(1, 1), Eigen::VectorXd::Zero(1)};
  l1.W << 1.0;
  Layer l2{Eigen::MatrixXd(1, 1), Eigen::VectorXd::Zero(1)};
  l2.W << 1.0;
  return ReluNet({l1, l2});
}

// profile of the manufactured state in x1; zero for s >= 1/2
double phi(double s) {
  if (s >= 0.5) return 0.0;
  const double t = s - 0.5;
  return t * t * t * t + 0.5 * t * t * t;
}

double phi_dd(double s) {
  if (s >= 0.5) return 0.0;
  const double t = s - 0.5;
  return 12.0 * t * t + 3.0 * t;
}

int interior_nodes(double length, double dx) {
  const double cells = length / dx;
  const int m = static_cast<int>(std::lround(cells));
  if (m < 3 || std::abs(cells - m) > 1e-9)
    throw std::invalid_argument("fixture: dx does not divide the domain");
  return m - 1;
}

}  // namespace

Fixture fixture_single_max(double dx, double alpha) {
  const int n = interior_nodes(1.0, dx);
  Fixture fx;
  Problem& p = fx.problem;
  p.name = "single-max";
  p.grid = Grid::square(0.0, 1.0, n);
  p.net = max_net();
  p.alpha = alpha;

  const double pi = M_PI;
  auto ystar = [&](double x1, double x2) { return phi(x1) * std::sin(pi * x2); };
  auto lap_ystar = [&](double x1, double x2) {
    return (phi_dd(x1) - pi * pi * phi(x1)) * std::sin(pi * x2);
  };

  // adjoint convention -Lap p + D0(y)p = y - g with reduced gradient p + alpha u:
  // p* = y* and u* = -y*/alpha
  p.exact_y = make_field(p.grid, ystar);
  p.exact_u = make_field(p.grid, [&](double x1, double x2) { return -ystar(x1, x2) / alpha; });
  // max(0, y*) = 0 and 1_{(0,inf)}(y*) = 0 since y* <= 0 everywhere
  p.f = make_field(p.grid,
                   [&](double x1, double x2) { return -lap_ystar(x1, x2) + ystar(x1, x2) / alpha; });
  p.g = make_field(p.grid, [&](double x1, double x2) { return ystar(x1, x2) + lap_ystar(x1, x2); });

  const int sz = p.grid.size();
  p.bounds.ua = Field::Constant(sz, -1e12);
  p.bounds.ub = Field::Constant(sz, 1e12);
  p.u0 = Field::Zero(sz);
  return fx;
}

ReluNet two_layer_net(TwoLayerKind kind) {
  Layer l1{Eigen::MatrixXd(3, 1), Eigen::VectorXd(3)};
  l1.W << 5.0, 0.1, 10.0;
  l1.b << 10.0, -1.0, -60.0;
  Layer l2{Eigen::MatrixXd(2, 3), Eigen::VectorXd(2)};
  const double w23 = kind == TwoLayerKind::Monotone ? -0.03 : -0.12;
  l2.W << 0.3, 2.0, -0.16, 0.1, 1.0, w23;
  l2.b << 0.0, 1.0;
  Layer l3{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Zero(1)};
  l3.W << 2.0, 1.5;
  return ReluNet({l1, l2, l3});
}

Fixture fixture_two_layer(TwoLayerKind kind, double dx, double alpha) {
  const int n = interior_nodes(2.0, dx);
  Fixture fx;
  Problem& p = fx.problem;
  p.name = kind == TwoLayerKind::Monotone ? "two-layer-mono" : "two-layer-nonmono";
  p.grid = Grid::square(0.0, 2.0, n);
  p.net = two_layer_net(kind);
  p.alpha = alpha;

  const int sz = p.grid.size();
  p.bounds.ua = Field::Constant(sz, -1000.0);
  p.bounds.ub = Field::Constant(sz, 1000.0);

  const double pi = M_PI;
  Field g0 = make_field(p.grid, [&](double x, double y) {
    return 200.0 * std::sin(pi * x) * std::sin(pi * y);
  });
  Field u0(sz);
  for (int i = 0; i < sz; ++i) {
    const double v = 2.0 * pi * pi * g0(i) + eval1(p.net, g0(i));
    u0(i) = std::clamp(v, -1000.0, 1000.0);
  }

  StateSolveOptions opt;
  auto st = solve_state(p.net, p.grid, u0, opt);
  if (st.linear_breakdown || !st.y.allFinite())
    throw std::runtime_error("fixture_two_layer: state solve failed during construction");
  const Field& y0 = st.y;

  // target from the discrete optimality system at (u0, y0) with p0 = -alpha u0
  Field p0 = -alpha * u0;
  Field c0(sz), lap_p0(sz);
  kernels::net_d0(p.net, y0.data(), c0.data(), sz);
  c0 = c0.cwiseMax(0.0);
  kernels::laplacian_apply(p.grid, p0.data(), lap_p0.data());
  p.g = y0 - (lap_p0 + c0.cwiseProduct(p0));

  p.f = Field::Zero(sz);
  p.u0 = Field::Zero(sz);
  fx.u0_data = std::move(u0);
  fx.y0_data = y0;
  return fx;
}

Fixture make_fixture(FixtureFamily family, double dx, double alpha) {
  switch (family) {
    case FixtureFamily::SingleMax: return fixture_single_max(dx, alpha);
    case FixtureFamily::TwoLayerMono: return fixture_two_layer(TwoLayerKind::Monotone, dx, alpha);
    case FixtureFamily::TwoLayerNonmono:
      return fixture_two_layer(TwoLayerKind::Nonmonotone, dx, alpha);
  }
  throw std::logic_error("make_fixture: unknown family");
}

namespace {

const char* family_name(FixtureFamily f) {
  switch (f) {
    case FixtureFamily::SingleMax: return "single-max";
    case FixtureFamily::TwoLayerMono: return "two-layer-mono";
    case FixtureFamily::TwoLayerNonmono: return "two-layer-nonmono";
  }
  return "?";
}

bool verbose() {
  const char* v = std::getenv("RELU_OCP_VERBOSE");
  return v && *v && std::string(v) != "0";
}

}  // namespace

SweepResult run_sweep(FixtureFamily family, const std::vector<double>& alphas,
                      const std::vector<double>& dxs, const DescentConfig& cfg) {
  SweepResult result;
  result.family = family_name(family);
  for (double alpha : alphas) {
    for (double dx : dxs) {
      SweepCell cell;
      cell.alpha = alpha;
      cell.dx = dx;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        Fixture fx = make_fixture(family, dx, alpha);
        cell.report = run(fx.problem, cfg);
        cell.cost = cell.report.final_cost;
        cell.iterations = static_cast<int>(cell.report.iterations.size());
        cell.final_h_norm = cell.report.final_h_norm;
        cell.converged = cell.report.converged;
        if (fx.problem.exact_u) {
          const Field& ue = *fx.problem.exact_u;
          cell.rel_err_u = norm_l2(fx.problem.grid, ue - cell.report.u) / norm_l2(fx.problem.grid, ue);
        }
        if (fx.problem.exact_y) {
          const Field& ye = *fx.problem.exact_y;
          cell.rel_err_y = norm_l2(fx.problem.grid, ye - cell.report.y) / norm_l2(fx.problem.grid, ye);
        }
      } catch (const std::exception& e) {
        cell.failed = true;
        if (verbose()) std::cerr << "cell failed: " << e.what() << "\n";
      }
      cell.cpu_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (verbose())
        std::cerr << result.family << " alpha=" << alpha << " dx=" << dx
                  << " iters=" << cell.iterations << " cost=" << cell.cost
                  << " |h|=" << cell.final_h_norm << " conv=" << cell.converged
                  << " t=" << cell.cpu_seconds << "s\n";
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

double convergence_order(const std::vector<std::pair<double, double>>& dx_err) {
  if (dx_err.size() < 3) throw std::invalid_argument("convergence_order: need >= 3 levels");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(dx_err.size());
  for (auto [dx, err] : dx_err) {
    const double lx = std::log(dx), ly = std::log(std::max(err, 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

namespace {

nlohmann::json cell_json(const SweepCell& c) {
  nlohmann::json j{{"alpha", c.alpha},
                   {"dx", c.dx},
                   {"cost", c.cost},
                   {"rel_err_u", c.rel_err_u},
                   {"rel_err_y", c.rel_err_y},
                   {"iterations", c.iterations},
                   {"cpu_seconds", c.cpu_seconds},
                   {"final_h_norm", c.final_h_norm},
                   {"converged", c.converged},
                   {"failed", c.failed},
                   {"termination", c.report.termination}};
  j["iteration_log"] = nlohmann::json::array();
  for (const auto& r : c.report.iterations)
    j["iteration_log"].push_back({{"k", r.k},
                                  {"cost", r.cost},
                                  {"h_norm", r.h_norm},
                                  {"tau", r.tau},
                                  {"eps", r.eps},
                                  {"delta", r.delta},
                                  {"robustified", r.robustified},
                                  {"nonsmooth_fraction", r.nonsmooth_fraction},
                                  {"cpu_time", r.cpu_time}});
  return j;
}

}  // namespace

std::string emit_string(const SweepResult& result, const std::string& format) {
  std::ostringstream os;
  if (format == "csv") {
    os.precision(17);
    os << "alpha,dx,cost,rel_err_u,rel_err_y,iterations,cpu_seconds,final_h_norm,converged,failed\n";
    for (const auto& c : result.cells)
      os << c.alpha << ',' << c.dx << ',' << c.cost << ',' << c.rel_err_u << ',' << c.rel_err_y
         << ',' << c.iterations << ',' << c.cpu_seconds << ',' << c.final_h_norm << ','
         << (c.converged ? 1 : 0) << ',' << (c.failed ? 1 : 0) << '\n';
    return os.str();
  }
  if (format == "md") {
    os.precision(6);
    const bool with_err = std::any_of(result.cells.begin(), result.cells.end(),
                                      [](const SweepCell& c) { return c.rel_err_u >= 0.0; });
    if (with_err) {
      os << "| alpha | dx | rel err u | rel err y | Cost | Iterates |\n";
      os << "|---|---|---|---|---|---|\n";
      for (const auto& c : result.cells)
        os << "| " << c.alpha << " | " << c.dx << " | " << c.rel_err_u << " | " << c.rel_err_y
           << " | " << c.cost << " | " << c.iterations << " |\n";
    } else {
      os << "| alpha | dx | Cost | ||h|| | Iterates | CPU time |\n";
      os << "|---|---|---|---|---|---|\n";
      for (const auto& c : result.cells)
        os << "| " << c.alpha << " | " << c.dx << " | " << c.cost << " | " << c.final_h_norm
           << " | " << c.iterations << " | " << c.cpu_seconds << "s |\n";
    }
    return os.str();
  }
  if (format == "json") {
    nlohmann::json doc;
    doc["family"] = result.family;
    doc["cells"] = nlohmann::json::array();
    for (const auto& c : result.cells) doc["cells"].push_back(cell_json(c));
    return doc.dump(2);
  }
  throw std::invalid_argument("emit: unknown format " + format);
}

void emit(const SweepResult& result, const std::string& format, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("emit: cannot open " + path);
  os << emit_string(result, format);
}

SweepResult sweep_from_json(const std::string& doc) {
  auto j = nlohmann::json::parse(doc);
  SweepResult result;
  result.family = j.at("family").get<std::string>();
  for (const auto& jc : j.at("cells")) {
    SweepCell c;
    c.alpha = jc.at("alpha");
    c.dx = jc.at("dx");
    c.cost = jc.at("cost");
    c.rel_err_u = jc.at("rel_err_u");
    c.rel_err_y = jc.at("rel_err_y");
    c.iterations = jc.at("iterations");
    c.cpu_seconds = jc.at("cpu_seconds");
    c.final_h_norm = jc.at("final_h_norm");
    c.converged = jc.at("converged");
    c.failed = jc.at("failed");
    c.report.termination = jc.at("termination");
    for (const auto& jr : jc.at("iteration_log")) {
      IterationRecord r;
      r.k = jr.at("k");
      r.cost = jr.at("cost");
      r.h_norm = jr.at("h_norm");
      r.tau = jr.at("tau");
      r.eps = jr.at("eps");
      r.delta = jr.at("delta");
      r.robustified = jr.at("robustified");
      r.nonsmooth_fraction = jr.at("nonsmooth_fraction");
      r.cpu_time = jr.at("cpu_time");
      c.report.iterations.push_back(r);
    }
    result.cells.push_back(std::move(c));
  }
  return result;
}

}  // namespace relu_ocp
