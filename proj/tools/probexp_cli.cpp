// probexp: solve / bench / stability / list-problems.

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "probexp/bench.hpp"

using namespace probexp;

namespace {

struct Options {
  std::string problem = "logistic";
  std::vector<std::string> params;
  std::vector<std::string> methods;
  int q = 2;
  double h = 0.0;
  std::vector<double> h_list;
  std::vector<double> z_list;
  int nodes = 0;
  bool calibrate = true;
  bool smooth = true;
  double ref_tol = 1e-10;
  std::string out;
  std::uint64_t seed = 0;
  int samples = 0;
  bool paper_scale = false;
  unsigned workers = 0;
  int repetitions = 3;
};

ProblemParams parse_params(const std::vector<std::string>& raw) {
  ProblemParams out;
  for (const auto& kv : raw) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("--param expects key=value, got '" + kv + "'");
    }
    out[kv.substr(0, eq)] = parse_double(kv.substr(eq + 1));
  }
  return out;
}

BenchOptions bench_options(const Options& o) {
  BenchOptions b;
  b.q = o.q;
  b.nodes = o.nodes;
  b.calibrate = o.calibrate;
  b.smooth = o.smooth;
  b.workers = o.workers;
  b.repetitions = o.repetitions;
  return b;
}

// Writes to --out, or stdout when no path is given.
template <class Fn>
void emit(const std::string& path, Fn&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write(os);
}

int run_solve(const Options& o) {
  const auto ivp = make_problem(o.problem, parse_params(o.params), o.paper_scale);
  const std::string method = o.methods.empty() ? "ekl-ioup" : o.methods.front();
  if (o.methods.size() > 1) throw std::invalid_argument("solve takes a single --method");
  const double h = o.h > 0.0 ? o.h : 0.1;
  const auto config = method_config(method, h, bench_options(o));
  const auto sol = solve(ivp, config);
  const std::size_t last = sol.grid.size() - 1;

  std::ostream& summary = o.out.empty() ? std::cerr : std::cout;
  summary << "problem     " << ivp.name << "\n"
          << "method      " << method << " (q=" << config.q << ", h=" << format_double(h) << ")\n"
          << "steps       " << last << "\n"
          << "f_evals     " << sol.work.f_evals << "\n"
          << "jac_evals   " << sol.work.jac_evals << "\n"
          << "expm_calls  " << sol.work.expm_calls << "\n"
          << "sigma_hat   " << format_double(sol.sigma_hat) << "\n"
          << "|y(T)|      " << format_double(sol.y(last).norm()) << "\n";

  if (o.out.empty() && o.samples == 0) return 0;
  std::vector<std::vector<Vector>> draws;
  if (o.samples > 0) {
    if (sol.smoothed.empty()) throw std::invalid_argument("--samples needs --smooth true");
    for (int s = 0; s < o.samples; ++s) draws.push_back(sample(sol.filtered.back(), sol.backward, o.seed + s));
  }
  emit(o.out, [&](std::ostream& os) {
    os << "t,component,mean,std";
    for (int s = 0; s < o.samples; ++s) os << ",sample" << s;
    os << '\n';
    for (std::size_t n = 0; n <= last; ++n) {
      const auto& st = sol.states()[n];
      const Vector var = (st.cov_sqrt * st.cov_sqrt.transpose()).diagonal();
      for (int i = 0; i < ivp.dim; ++i) {
        os << format_double(sol.grid[n]) << ',' << i << ',' << format_double(st.mean[i]) << ','
           << format_double(std::sqrt(std::max(var[i], 0.0)));
        for (const auto& d : draws) os << ',' << format_double(d[n][i]);
        os << '\n';
      }
    }
  });
  return 0;
}

int run_bench(const Options& o) {
  const auto ivp = make_problem(o.problem, parse_params(o.params), o.paper_scale);
  const auto methods = o.methods.empty() ? method_tags() : o.methods;
  std::vector<double> hs = o.h_list;
  if (o.h > 0.0) hs.push_back(o.h);
  if (hs.empty()) hs = {0.5, 0.2, 0.1, 0.05, 0.02, 0.01};
  std::cerr << "reference for " << ivp.name << " at tol " << format_double(o.ref_tol) << "...\n";
  const auto ref = reference(ivp, o.ref_tol);
  std::cerr << "  step " << format_double(ref.h) << ", estimated accuracy "
            << format_double(ref.estimated_accuracy) << "\n";
  const auto records = work_precision(ivp, methods, hs, ref, bench_options(o));
  emit(o.out, [&](std::ostream& os) { write_csv(os, records); });
  return 0;
}

int run_stability(const Options& o) {
  const auto methods = o.methods.empty() ? method_tags() : o.methods;
  std::vector<double> zs = o.z_list;
  if (zs.empty()) {
    zs.push_back(0.0);
    for (int k = -30; k <= 60; ++k) zs.push_back(-std::pow(10.0, k / 10.0));
  }
  const auto rows = stability_sweep(methods, zs, bench_options(o));
  emit(o.out, [&](std::ostream& os) { write_stability_csv(os, rows); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic exponential integrators: solver and benchmark harness"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_config("--config", "", "Key-value (TOML/INI) file mirroring the flags");
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--problem", o.problem, "Problem name (see list-problems)")->capture_default_str();
  app.add_option("--param", o.params, "Problem parameter key=value (repeatable)");
  app.add_option("--method", o.methods, "Method tag(s); comma-separated for bench/stability")
      ->delimiter(',')
      ->check(CLI::IsMember(method_tags()));
  app.add_option("--q", o.q, "Number of derivatives in the prior state")->capture_default_str()
      ->check(CLI::Range(1, 12));
  auto* h_opt = app.add_option("--h", o.h, "Step size")->check(CLI::PositiveNumber);
  app.add_option("--h-list", o.h_list, "Comma-separated step sizes (bench)")->delimiter(',')->excludes(h_opt);
  app.add_option("--z-list", o.z_list, "Comma-separated z <= 0 (stability)")->delimiter(',');
  app.add_option("--nodes", o.nodes, "Quadrature nodes for the IOUP process noise; 0 = max(q, 10)")
      ->capture_default_str();
  app.add_option("--calibrate", o.calibrate, "Quasi-MLE diffusion calibration")->capture_default_str();
  app.add_option("--smooth", o.smooth, "Run the smoother")->capture_default_str();
  app.add_option("--ref-tol", o.ref_tol, "Reference solution tolerance (bench)")->capture_default_str();
  app.add_option("--out", o.out, "Output CSV path (default stdout)");
  app.add_option("--seed", o.seed, "Seed for posterior samples (solve)")->capture_default_str();
  app.add_option("--samples", o.samples, "Posterior sample paths in the trajectory CSV (solve)")
      ->capture_default_str();
  app.add_option("--paper-scale", o.paper_scale, "Full-size PDE grids")->capture_default_str();
  app.add_option("--workers", o.workers, "Bench worker threads; 0 = all cores")->capture_default_str();
  app.add_option("--repetitions", o.repetitions, "Timing repetitions per run (median reported)")
      ->capture_default_str();

  auto* solve_cmd = app.add_subcommand("solve", "One run; summary plus optional trajectory CSV");
  auto* bench_cmd = app.add_subcommand("bench", "Work-precision CSV");
  auto* stab_cmd = app.add_subcommand("stability", "Empirical stability function R(z) CSV");
  auto* list_cmd = app.add_subcommand("list-problems", "Problem names and method tags");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return run_solve(o);
    if (bench_cmd->parsed()) return run_bench(o);
    if (stab_cmd->parsed()) return run_stability(o);
    if (list_cmd->parsed()) {
      std::cout << "problems:";
      for (const auto& p : problem_names()) std::cout << ' ' << p;
      std::cout << "\nmethods:";
      for (const auto& m : method_tags()) std::cout << ' ' << m;
      std::cout << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
