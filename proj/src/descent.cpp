#include "relu_ocp/descent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "relu_ocp/kernels.hpp"

namespace relu_ocp {

namespace {

double merit_violation(const Grid& g, const Field& u, const BoxBounds& b) {
  Field up = (u - b.ub).cwiseMax(0.0);
  Field lo = (u - b.ua).cwiseMin(0.0);
  return norm_l2(g, up) + norm_l2(g, lo);
}

double pdas_lambda(const DescentConfig& cfg, double alpha) {
  if (cfg.lambda > 0.0) return cfg.lambda;
  return alpha <= 1e-12 ? 1e-6 : alpha;
}

}  // namespace

ObjectiveResult reduced_objective(const Problem& prob, const Field& u, const Poisson* poisson,
                                  const Field* y_warm) {
  ObjectiveResult res;
  StateSolveOptions opt;
  opt.poisson = poisson;
  opt.y0 = y_warm;
  auto st = solve_state(prob.net, prob.grid, u + prob.f, opt);
  if (st.linear_breakdown || !st.y.allFinite()) return res;
  res.y = std::move(st.y);
  const double track = norm_l2(prob.grid, res.y - prob.g);
  const double ctrl = norm_l2(prob.grid, u);
  res.J = 0.5 * track * track + 0.5 * prob.alpha * ctrl * ctrl;
  res.ok = true;
  return res;
}

double reduced_dderiv(const Problem& prob, const Field& u, const Field& y, const Field& h,
                      const Poisson* poisson, bool* ok) {
  const Grid& g = prob.grid;
  const int n = g.size();
  if (ok) *ok = true;

  std::vector<EvalTrace> traces(n);
  for (int i = 0; i < n; ++i) eval1(prob.net, y(i), &traces[i]);

  // semismooth Newton for -Lap z + N'(y; z) = h
  Field z = Field::Zero(n), lap(n), resid(n), coeff(n);
  double prev = std::numeric_limits<double>::infinity();
  bool solved = false;
  for (int it = 0; it < 50; ++it) {
    kernels::laplacian_apply(g, z.data(), lap.data());
    for (int i = 0; i < n; ++i)
      resid(i) = lap(i) + dd_from_trace(prob.net, traces[i], z(i)) - h(i);
    const double rn = norm_l2(g, resid);
    // the equation is positively homogeneous in (h, z): tolerance relative to
    // the data, otherwise z carries an h-independent error that swamps the
    // derivative of small steps
    if (rn < 1e-13 * norm_l2(g, h) || rn >= prev) {
      solved = true;
      break;
    }
    prev = rn;
    for (int i = 0; i < n; ++i)
      coeff(i) = std::max(0.0, dd_slope_from_trace(prob.net, traces[i], z(i)));
    EllipticOp J(g, coeff);
    auto step = solve_linear(J, resid);
    if (!step.ok) break;
    z -= step.x;
  }
  if (!solved && ok) *ok = false;
  (void)poisson;
  return inner(g, y - prob.g, z) + prob.alpha * inner(g, u, h);
}

namespace {

// Strict descent threshold for the directional derivative, scaled by the step
// size since the attainable decrease is quadratic in h.
inline double descent_gate(double h_norm) { return -1e-14 * std::min(1.0, h_norm * h_norm); }

// Shared backtracking loop; eval returns (merit, state) at a trial control or
// nullopt when the trial state solve fails.
template <typename EvalFn>
ArmijoResult armijo_impl(const Grid& g, const Field& h, double E0, double dJ,
                         const DescentConfig& cfg, EvalFn&& eval) {
  ArmijoResult res;
  const double floor_eta = std::min(cfg.tau_min, cfg.tilde_c * norm_l2(g, h));
  // once the predicted decrease drops below the resolution of the merit value
  // itself the comparison is pure roundoff; fall back to the step the rule
  // selects in exact arithmetic under the subproblem's quadratic model, where
  // the decrease at step tau is tau*(1 - tau/2)*|dJ| and the condition
  // 1 - tau/2 >= nu gives tau <= 2*(1 - nu)
  const double merit_resolution = 1e-14 * (1.0 + std::abs(E0));
  const double tau_model = 2.0 * (1.0 - cfg.nu) * (1.0 + 1e-12);
  double tau = 1.0;
  while (tau > floor_eta) {
    if (std::abs(cfg.nu * tau * dJ) <= merit_resolution) {
      if (tau > tau_model) {
        tau *= cfg.c;
        continue;
      }
      auto trial = eval(tau);
      if (trial) {
        res.tau = tau;
        res.accepted = true;
        res.J_new = trial->first;
        res.y_new = std::move(trial->second);
        return res;
      }
      res.tau = tau;
      return res;
    }
    auto trial = eval(tau);
    if (trial) {
      const double E = trial->first;
      if (E <= E0 + cfg.nu * tau * dJ) {
        res.tau = tau;
        res.accepted = true;
        res.J_new = E;
        res.y_new = std::move(trial->second);
        return res;
      }
    }
    tau *= cfg.c;
  }
  res.tau = tau;
  return res;
}

}  // namespace

ArmijoResult armijo(const Problem& prob, const Field& u, const Field& h, double J, double dJ,
                    const DescentConfig& cfg, const Poisson* poisson, const Field* y_warm) {
  const double E0 = J + cfg.kappa * merit_violation(prob.grid, u, prob.bounds);
  return armijo_impl(prob.grid, h, E0, dJ, cfg,
                     [&](double tau) -> std::optional<std::pair<double, Field>> {
                       Field ut = u + tau * h;
                       auto obj = reduced_objective(prob, ut, poisson, y_warm);
                       if (!obj.ok) return std::nullopt;
                       const double E =
                           obj.J + cfg.kappa * merit_violation(prob.grid, ut, prob.bounds);
                       return std::make_pair(E, std::move(obj.y));
                     });
}

double nonsmooth_fraction(const ReluNet& net, const Field& y, double ns_tol) {
  int count = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (kink_distance1(net, y(i)) <= ns_tol) ++count;
  return y.size() ? static_cast<double>(count) / static_cast<double>(y.size()) : 0.0;
}

Field robustify(const Problem& prob, const Field& u, double delta, const DescentConfig& cfg,
                const Poisson* poisson) {
  if (cfg.robustify_budget <= 0 || delta <= 0.0) return u;
  const Grid& g = prob.grid;
  const int n = g.size();
  const SmoothingFamily fam = make_smoothing(SmoothingKind::PiecewisePolynomial, delta);
  const double lambda = pdas_lambda(cfg, prob.alpha);

  auto smoothed_objective = [&](const Field& uu,
                                const Field* warm) -> std::optional<std::pair<double, Field>> {
    StateSolveOptions opt;
    opt.poisson = poisson;
    opt.smoothing = &fam;
    opt.y0 = warm;
    auto st = solve_state(prob.net, g, uu + prob.f, opt);
    if (st.linear_breakdown || !st.y.allFinite()) return std::nullopt;
    const double track = norm_l2(g, st.y - prob.g);
    const double ctrl = norm_l2(g, uu);
    return std::make_pair(0.5 * track * track + 0.5 * prob.alpha * ctrl * ctrl, std::move(st.y));
  };

  Field uu = u;
  auto cur = smoothed_objective(uu, nullptr);
  if (!cur) return u;
  Field y = cur->second;
  double J = cur->first;

  for (int it = 0; it < cfg.robustify_budget; ++it) {
    Field cdelta(n);
    kernels::net_grad_smoothed(prob.net, fam, y.data(), cdelta.data(), n);
    cdelta = cdelta.cwiseMax(0.0);
    ControlSubproblem sub(g, cdelta, prob.alpha);
    Field p = sub.pi0_apply(y - prob.g);
    auto pd = sub.pdas_linear(uu, p, prob.bounds, lambda);
    if (pd.singular) break;
    const Field& h = pd.h;
    if (norm_l2(g, h) <= cfg.h_stop) break;
    const double dJ = inner(g, y - prob.g, sub.pi0_apply(h)) + prob.alpha * inner(g, uu, h);
    if (dJ >= -1e-14) break;

    const double E0 = J + cfg.kappa * merit_violation(g, uu, prob.bounds);
    auto ar = armijo_impl(g, h, E0, dJ, cfg,
                          [&](double tau) -> std::optional<std::pair<double, Field>> {
                            Field ut = uu + tau * h;
                            auto obj = smoothed_objective(ut, &y);
                            if (!obj) return std::nullopt;
                            obj->first += cfg.kappa * merit_violation(g, ut, prob.bounds);
                            return obj;
                          });
    if (!ar.accepted) break;
    uu += ar.tau * h;
    y = std::move(ar.y_new);
    J = ar.J_new;
  }
  return uu;
}

double b_stationarity_residual(const Problem& prob, const Field& u, const Field& y, int n_dirs,
                               std::uint64_t seed, const Poisson* poisson) {
  const Grid& g = prob.grid;
  const int n = g.size();

  Field c0(n);
  kernels::net_d0(prob.net, y.data(), c0.data(), n);
  c0 = c0.cwiseMax(0.0);
  EllipticOp op(g, c0);
  Field p = op.solve(y - prob.g);

  auto project = [&](Field h) {
    for (int i = 0; i < n; ++i) {
      if (u(i) <= prob.bounds.ua(i) + 1e-10 * (1.0 + std::abs(prob.bounds.ua(i))))
        h(i) = std::max(0.0, h(i));
      if (u(i) >= prob.bounds.ub(i) - 1e-10 * (1.0 + std::abs(prob.bounds.ub(i))))
        h(i) = std::min(0.0, h(i));
    }
    return h;
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double best = 0.0;
  for (int d = 0; d < n_dirs; ++d) {
    Field h(n);
    if (d == 0) {
      h = -(p + prob.alpha * u);  // steepest direction first
    } else {
      for (int i = 0; i < n; ++i) h(i) = normal(rng);
    }
    h = project(std::move(h));
    const double hn = norm_l2(g, h);
    if (hn < 1e-14) continue;
    h /= hn;
    best = std::min(best, reduced_dderiv(prob, u, y, h, poisson));
  }
  return best;
}

RunReport run(const Problem& prob, const DescentConfig& cfg) {
  using clock = std::chrono::steady_clock;
  RunReport rep;
  const Grid& g = prob.grid;
  const int n = g.size();
  Poisson poisson(g);
  const double lambda = pdas_lambda(cfg, prob.alpha);

  Field u = prob.u0;
  auto obj = reduced_objective(prob, u, &poisson);
  if (!obj.ok) {
    rep.termination = "state_failure";
    rep.u = u;
    return rep;
  }
  Field y = std::move(obj.y);
  double J = obj.J;

  double eps = cfg.eps0, delta = cfg.delta0;
  ActiveSets warm_sets;
  double hn = std::numeric_limits<double>::infinity();
  double hn_prev = std::numeric_limits<double>::infinity();

  for (int k = 0; k < cfg.max_outer; ++k) {
    const auto t0 = clock::now();
    IterationRecord rec;
    rec.k = k;
    rec.delta = delta;

    ControlSubproblem sub(g, prob.net, y, prob.alpha, cfg.kink_tol);
    Field p0 = sub.pi0_apply(y - prob.g);
    auto pd = sub.pdas_linear(u, p0, prob.bounds, lambda,
                              warm_sets.aplus.empty() ? nullptr : &warm_sets);
    if (pd.singular) {
      rep.termination = "subproblem_failure";
      break;
    }
    Field h = pd.h;
    warm_sets = pd.sets;
    rec.nonsmooth_fraction = nonsmooth_fraction(prob.net, y, cfg.ns_tol);

    double dJ = 0.0;
    bool terminated = false;
    // directional derivative with a model fallback: for tiny steps the exact
    // value cancels below inner-product roundoff; the subproblem's quadratic
    // form then certifies descent and supplies the usable magnitude
    const double ygn = norm_l2(g, y - prob.g);
    auto dderiv_resolved = [&](const Field& dir) {
      double v = reduced_dderiv(prob, u, y, dir, &poisson);
      const double resolution = 1e-13 * (ygn + prob.alpha * norm_l2(g, u)) * norm_l2(g, dir);
      if (std::abs(v) <= resolution) {
        const double qv = sub.q_apply(dir).qval;
        if (qv > 0.0) v = -qv;
      }
      return v;
    };
    if (rec.nonsmooth_fraction > 0.0) {
      SubproblemSolution warm;
      warm.h = h;
      warm.sets = pd.sets;
      warm.d_eps = Field::Zero(n);
      warm.p_eps = Field::Zero(n);
      int shrinks = 0;
      for (;;) {
        auto sol = sub.solve_kkt(eps, u, prob.g, prob.bounds, lambda, &warm);
        rep.nonmonotone_clamped = rep.nonmonotone_clamped || sol.nonmonotone_clamped;
        if (sol.breakdown) {
          rep.termination = "subproblem_failure";
          terminated = true;
          break;
        }
        h = sol.h;
        warm_sets = sol.sets;
        if (norm_l2(g, h) <= cfg.h_stop) {
          dJ = 0.0;
          break;
        }
        dJ = dderiv_resolved(h);
        // the attainable decrease scales like q(h,h); a fixed threshold would
        // reject genuine descent directions once the step is small
        if (dJ < descent_gate(norm_l2(g, h))) break;
        warm = std::move(sol);
        eps = std::max(eps * cfg.c1, 1e-300);
        if (++shrinks > cfg.max_eps_shrinks) {
          rep.termination = "eps_shrink_cap";
          rep.converged = true;  // approximate stationarity declared
          terminated = true;
          break;
        }
      }
    } else {
      dJ = dderiv_resolved(h);
    }

    hn = norm_l2(g, h);
    rec.h_norm = hn;
    rec.eps = eps;
    if (terminated) {
      rec.cost = J;
      rec.cpu_time = std::chrono::duration<double>(clock::now() - t0).count();
      rep.iterations.push_back(rec);
      break;
    }
    if (hn <= cfg.h_stop) {
      rep.termination = "h_stop";
      rep.converged = true;
      rec.cost = J;
      rec.cpu_time = std::chrono::duration<double>(clock::now() - t0).count();
      rep.iterations.push_back(rec);
      break;
    }
    // step norms bottom out near 1e-13 once factorization roundoff dominates;
    // a tiny step that no longer contracts is a converged run, not progress
    if (hn <= 1e-12 && hn >= 0.5 * hn_prev) {
      rep.termination = "h_floor";
      rep.converged = true;
      rec.cost = J;
      rec.cpu_time = std::chrono::duration<double>(clock::now() - t0).count();
      rep.iterations.push_back(rec);
      break;
    }
    hn_prev = hn;
    if (dJ >= descent_gate(hn)) {
      rep.termination = "stationary";
      rep.converged = true;
      rec.cost = J;
      rec.cpu_time = std::chrono::duration<double>(clock::now() - t0).count();
      rep.iterations.push_back(rec);
      break;
    }

    auto ar = armijo(prob, u, h, J, dJ, cfg, &poisson, &y);
    if (ar.accepted) {
      u += ar.tau * h;
      y = std::move(ar.y_new);
      J = ar.J_new;
      eps = std::max(eps * cfg.c1, 1e-300);
      rec.tau = ar.tau;
    } else {
      Field ur = robustify(prob, u, delta, cfg, &poisson);
      delta = std::max(delta * cfg.c2, 1e-300);
      rec.robustified = true;
      auto ro = reduced_objective(prob, ur, &poisson, &y);
      if (!ro.ok) {
        rep.termination = "state_failure";
        rep.iterations.push_back(rec);
        break;
      }
      u = std::move(ur);
      y = std::move(ro.y);
      J = ro.J;
      warm_sets = ActiveSets{};
    }
    rec.cost = J;
    rec.eps = eps;
    rec.delta = delta;
    rec.cpu_time = std::chrono::duration<double>(clock::now() - t0).count();
    rep.iterations.push_back(rec);
  }

  if (rep.termination.empty()) rep.termination = "max_outer";

  // step-norm decay diagnostic over the non-robustified iterations
  std::vector<double> hs;
  for (const auto& r : rep.iterations)
    if (!r.robustified) hs.push_back(r.h_norm);
  if (hs.size() >= 8) {
    auto median = [](std::vector<double> v) {
      std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
      return v[v.size() / 2];
    };
    const size_t q = hs.size() / 4;
    std::vector<double> first(hs.begin(), hs.begin() + q);
    std::vector<double> last(hs.end() - q, hs.end());
    rep.stagnation = !(median(last) < median(first));
  }
  if (rep.termination == "max_outer" && !rep.stagnation) rep.converged = true;

  rep.u = u;
  rep.y = y;
  Field c0(n);
  kernels::net_d0(prob.net, y.data(), c0.data(), n);
  EllipticOp adj(g, c0.cwiseMax(0.0));
  rep.p = adj.solve(y - prob.g);
  rep.final_cost = J;
  rep.final_h_norm = std::isfinite(hn) ? hn : 0.0;
  rep.b_stationarity =
      b_stationarity_residual(prob, u, y, cfg.stationarity_dirs, cfg.seed, &poisson);
  return rep;
}

namespace {

nlohmann::json record_json(const IterationRecord& r) {
  return {{"k", r.k},
          {"cost", r.cost},
          {"h_norm", r.h_norm},
          {"tau", r.tau},
          {"eps", r.eps},
          {"delta", r.delta},
          {"robustified", r.robustified},
          {"nonsmooth_fraction", r.nonsmooth_fraction},
          {"cpu_time", r.cpu_time}};
}

}  // namespace

std::string RunReport::to_json_string() const {
  nlohmann::json doc;
  doc["termination"] = termination;
  doc["converged"] = converged;
  doc["stagnation"] = stagnation;
  doc["nonmonotone_clamped"] = nonmonotone_clamped;
  doc["final_cost"] = final_cost;
  doc["final_h_norm"] = final_h_norm;
  doc["b_stationarity"] = b_stationarity;
  doc["iterations"] = nlohmann::json::array();
  for (const auto& r : iterations) doc["iterations"].push_back(record_json(r));
  doc["u"] = std::vector<double>(u.data(), u.data() + u.size());
  doc["y"] = std::vector<double>(y.data(), y.data() + y.size());
  doc["p"] = std::vector<double>(p.data(), p.data() + p.size());
  return doc.dump(2);
}

std::string RunReport::to_csv_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "k,cost,h_norm,tau,eps,delta,robustified,nonsmooth_fraction,cpu_time\n";
  for (const auto& r : iterations)
    os << r.k << ',' << r.cost << ',' << r.h_norm << ',' << r.tau << ',' << r.eps << ','
       << r.delta << ',' << (r.robustified ? 1 : 0) << ',' << r.nonsmooth_fraction << ','
       << r.cpu_time << '\n';
  return os.str();
}

std::string RunReport::iteration_log() const {
  std::ostringstream os;
  for (const auto& r : iterations) os << record_json(r).dump() << '\n';
  return os.str();
}

}  // namespace relu_ocp
