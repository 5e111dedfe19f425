// Timing comparison of the OpenMP kernels against their serial references.

#include <chrono>
#include <cstdio>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "relu_ocp/bench.hpp"
#include "relu_ocp/kernels.hpp"

using namespace relu_ocp;

namespace {

template <typename Fn>
double time_best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, double max_diff) {
  std::printf("%-22s serial %.3es  parallel %.3es  speedup %.2fx  max|diff| %.3e\n", name, serial,
              parallel, serial / parallel, max_diff);
}

}  // namespace

int main(int argc, char** argv) {
  int n = argc > 1 ? std::atoi(argv[1]) : 511;
  int reps = argc > 2 ? std::atoi(argv[2]) : 5;
  Grid g = Grid::square(0.0, 1.0, n);
  const int sz = g.size();
#ifdef _OPENMP
  std::printf("grid %dx%d (%d nodes), %d threads\n", n, n, sz, omp_get_max_threads());
#else
  std::printf("grid %dx%d (%d nodes), OpenMP disabled\n", n, n, sz);
#endif

  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist(0.0, 5.0);
  Field x(sz), out_s(sz), out_p(sz);
  for (int i = 0; i < sz; ++i) x(i) = dist(rng);

  double ts = time_best_of(reps, [&] { kernels::laplacian_apply_serial(g, x.data(), out_s.data()); });
  double tp = time_best_of(reps, [&] { kernels::laplacian_apply(g, x.data(), out_p.data()); });
  report("laplacian_apply", ts, tp, (out_s - out_p).cwiseAbs().maxCoeff());

  double acc_s = 0, acc_p = 0;
  ts = time_best_of(reps, [&] { acc_s = kernels::dot_serial(x.data(), x.data(), sz); });
  tp = time_best_of(reps, [&] { acc_p = kernels::dot(x.data(), x.data(), sz); });
  report("dot", ts, tp, std::abs(acc_s - acc_p) / std::abs(acc_s));

  ReluNet net = two_layer_net(TwoLayerKind::Monotone);
  ts = time_best_of(reps, [&] { kernels::net_values_serial(net, x.data(), out_s.data(), sz); });
  tp = time_best_of(reps, [&] { kernels::net_values(net, x.data(), out_p.data(), sz); });
  report("net_values", ts, tp, (out_s - out_p).cwiseAbs().maxCoeff());

  ts = time_best_of(reps, [&] { kernels::net_d0_serial(net, x.data(), out_s.data(), sz); });
  tp = time_best_of(reps, [&] { kernels::net_d0(net, x.data(), out_p.data(), sz); });
  report("net_d0", ts, tp, (out_s - out_p).cwiseAbs().maxCoeff());

  SmoothingFamily fam = make_smoothing(SmoothingKind::PiecewisePolynomial, 0.1);
  ts = time_best_of(reps,
                    [&] { kernels::net_values_smoothed_serial(net, fam, x.data(), out_s.data(), sz); });
  tp = time_best_of(reps, [&] { kernels::net_values_smoothed(net, fam, x.data(), out_p.data(), sz); });
  report("net_values_smoothed", ts, tp, (out_s - out_p).cwiseAbs().maxCoeff());

  ts = time_best_of(reps,
                    [&] { kernels::net_grad_smoothed_serial(net, fam, x.data(), out_s.data(), sz); });
  tp = time_best_of(reps, [&] { kernels::net_grad_smoothed(net, fam, x.data(), out_p.data(), sz); });
  report("net_grad_smoothed", ts, tp, (out_s - out_p).cwiseAbs().maxCoeff());

  return 0;
}
