#include <CLI11.hpp>
#include <iostream>
#include <stdexcept>

#include "relu_ocp/bench.hpp"

namespace {

double parse_dx(const std::string& s) {
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    const double num = std::stod(s.substr(0, slash));
    const double den = std::stod(s.substr(slash + 1));
    if (den == 0.0) throw std::invalid_argument("dx: division by zero");
    return num / den;
  }
  return std::stod(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal control of semilinear elliptic PDEs with ReLU network nonlinearity"};
  app.require_subcommand(1);

  auto* runcmd = app.add_subcommand("run", "Run a parameter sweep on a built-in example");
  std::string example = "single-max";
  std::vector<double> alphas{1e-2};
  std::vector<std::string> dx_strs{"1/32"};
  double nu = 0.9;
  std::string out, format = "csv";
  int max_outer = 200;
  std::uint64_t seed = 0;
  runcmd->add_option("--example", example, "single-max | two-layer-mono | two-layer-nonmono")
      ->check(CLI::IsMember({"single-max", "two-layer-mono", "two-layer-nonmono"}));
  runcmd->add_option("--alpha", alphas, "control cost weights")->expected(-1)->delimiter(',');
  runcmd->add_option("--dx", dx_strs, "mesh sizes, e.g. 1/32 or 0.03125")
      ->expected(-1)
      ->delimiter(',');
  runcmd->add_option("--nu", nu, "Armijo parameter");
  runcmd->add_option("--out", out, "output path (stdout when omitted)");
  runcmd->add_option("--format", format, "csv | md | json")
      ->check(CLI::IsMember({"csv", "md", "json"}));
  runcmd->add_option("--max-outer", max_outer, "outer iteration cap");
  runcmd->add_option("--seed", seed, "seed for sampled diagnostics");

  CLI11_PARSE(app, argc, argv);

  try {
    relu_ocp::FixtureFamily family = relu_ocp::FixtureFamily::SingleMax;
    if (example == "two-layer-mono") family = relu_ocp::FixtureFamily::TwoLayerMono;
    if (example == "two-layer-nonmono") family = relu_ocp::FixtureFamily::TwoLayerNonmono;

    std::vector<double> dxs;
    for (const auto& s : dx_strs) dxs.push_back(parse_dx(s));

    relu_ocp::DescentConfig cfg;
    cfg.nu = nu;
    cfg.max_outer = max_outer;
    cfg.seed = seed;

    auto result = relu_ocp::run_sweep(family, alphas, dxs, cfg);
    if (out.empty())
      std::cout << relu_ocp::emit_string(result, format);
    else
      relu_ocp::emit(result, format, out);

    for (const auto& c : result.cells)
      if (c.failed || !c.converged) return 1;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
