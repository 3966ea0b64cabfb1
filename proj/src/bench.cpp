#include "probexp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace probexp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<MethodSpec>& methods_table() {
  static const std::vector<MethodSpec> table = {
      {"ek0-iwp", PriorChoice::Iwp, LinearizationKind::Ek0},
      {"ek1-iwp", PriorChoice::Iwp, LinearizationKind::Ek1},
      {"ekl-iwp", PriorChoice::Iwp, LinearizationKind::Ekl},
      {"ekl-ioup", PriorChoice::Ioup, LinearizationKind::Ekl},
      {"ek1-ioup-rb", PriorChoice::IoupRosenbrock, LinearizationKind::Ek1},
  };
  return table;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

long parse_long(const std::string& s) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not an integer: '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<std::string> method_tags() {
  std::vector<std::string> tags;
  for (const auto& m : methods_table()) tags.push_back(m.tag);
  return tags;
}

MethodSpec parse_method(const std::string& tag) {
  for (const auto& m : methods_table()) {
    if (m.tag == tag) return m;
  }
  throw std::invalid_argument("unknown method '" + tag + "'");
}

SolverConfig method_config(const std::string& tag, double h, const BenchOptions& options) {
  const MethodSpec spec = parse_method(tag);
  SolverConfig c;
  c.prior = spec.prior;
  c.linearization = spec.linearization;
  c.q = options.q;
  c.h = h;
  c.nodes = options.nodes > 0 ? options.nodes : std::max(options.q, 10);
  c.calibrate = options.calibrate;
  c.smooth = options.smooth;
  return c;
}

Vector ReferenceSolution::eval(double t) const {
  const Eigen::Index intervals = states.cols() - 1;
  const double t_end = t0 + sample_h * static_cast<double>(intervals);
  if (t < t0 - 1e-12 || t > t_end + 1e-12) {
    throw std::out_of_range("reference: time outside the reference span");
  }
  const double s = (t - t0) / sample_h;
  Eigen::Index i =
      std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(s)), 0, intervals - 1);
  const double u = std::clamp(s - static_cast<double>(i), 0.0, 1.0);
  if (u == 0.0) return states.col(i);
  if (u == 1.0) return states.col(i + 1);
  // Cubic Hermite basis.
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
  const double h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u);
  const double h11 = u * u * (u - 1);
  return h00 * states.col(i) + h10 * sample_h * derivatives.col(i) + h01 * states.col(i + 1) +
         h11 * sample_h * derivatives.col(i + 1);
}

ReferenceSolution reference(const SemiLinearIVP& ivp, double tol, int max_halvings) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("reference: tolerance must be positive");
  }
  const double span = ivp.t_end - ivp.t0;
  // Dense output is kept on a power-of-two subgrid so memory stays bounded
  // however small the stepper's step gets.
  constexpr long kMaxStored = 1L << 14;

  struct Run {
    Matrix stored;
    long stride = 1;
  };
  auto run = [&](long n) {
    const double h = span / static_cast<double>(n);
    Run r;
    r.stride = std::max(1L, n / kMaxStored);
    r.stored.resize(ivp.dim, n / r.stride + 1);
    r.stored.col(0) = ivp.y0;
    ClassicStepper stepper(ivp, h);
    Vector y = ivp.y0;
    Vector y_tilde = ivp.y0;
    for (long k = 0; k < n; ++k) {
      auto [next, next_tilde] = stepper.step(y, y_tilde, ivp.t0 + k * h);
      y = std::move(next);
      y_tilde = std::move(next_tilde);
      if ((k + 1) % r.stride == 0) r.stored.col((k + 1) / r.stride) = y;
    }
    return r;
  };

  long steps = 16;
  Vector previous = run(steps).stored.rightCols(1);
  for (int halving = 1; halving <= max_halvings; ++halving) {
    steps *= 2;
    Run current = run(steps);
    const Vector fine = current.stored.rightCols(1);
    if (!current.stored.allFinite()) {
      throw OracleError("reference: classic stepper produced non-finite values");
    }
    const double scale = fine.norm() > 0.0 ? fine.norm() : 1.0;
    const double change = (fine - previous).norm() / scale;
    if (change <= tol) {
      ReferenceSolution ref;
      ref.t0 = ivp.t0;
      ref.h = span / static_cast<double>(steps);
      ref.sample_h = ref.h * static_cast<double>(current.stride);
      const Eigen::Index cols = current.stored.cols();
      ref.derivatives.resize(ivp.dim, cols);
      for (Eigen::Index k = 0; k < cols; ++k) {
        ref.derivatives.col(k) = ivp.f(current.stored.col(k), ivp.t0 + k * ref.sample_h);
      }
      ref.states = std::move(current.stored);
      ref.solver = "exponential-trapezoidal-pec h=" + format_double(ref.h);
      ref.estimated_accuracy = change;
      return ref;
    }
    previous = fine;
  }
  throw OracleError("reference: no convergence within " + std::to_string(max_halvings) +
                    " halvings");
}

RunRecord run_method(const SemiLinearIVP& ivp, const std::string& method, double h,
                     const ReferenceSolution& ref, const BenchOptions& options) {
  const SolverConfig config = method_config(method, h, options);
  RunRecord rec;
  rec.problem = ivp.name;
  rec.method = method;
  rec.q = config.q;
  rec.h = h;
  rec.steps = static_cast<long>(make_grid(ivp, config).size()) - 1;

  std::vector<double> times;
  const int reps = std::max(1, options.repetitions);
  std::optional<ProbabilisticSolution> sol;
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    try {
      sol = solve(ivp, config);
    } catch (const DivergenceError& e) {
      rec.diverged = true;
      rec.f_evals = e.work().f_evals;
      rec.jac_evals = e.work().jac_evals;
      rec.expm_calls = e.work().expm_calls;
    } catch (const StepFailure&) {
      rec.diverged = true;
    }
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(stop - start).count());
    if (rec.diverged) break;
  }
  std::sort(times.begin(), times.end());
  rec.wall_time_s = times[times.size() / 2];

  if (rec.diverged) {
    rec.rmse_final = kInf;
    rec.l2_traj = kInf;
    rec.sigma_hat = std::numeric_limits<double>::quiet_NaN();
    rec.f_evals = std::max(rec.f_evals, rec.steps);
    return rec;
  }

  rec.f_evals = sol->work.f_evals;
  rec.jac_evals = sol->work.jac_evals;
  rec.expm_calls = sol->work.expm_calls;
  rec.sigma_hat = sol->sigma_hat;
  const double sqrt_d = std::sqrt(static_cast<double>(ivp.dim));
  double sq_sum = 0.0;
  for (std::size_t n = 0; n < sol->grid.size(); ++n) {
    const double e = (sol->y(n) - ref.eval(sol->grid[n])).norm() / sqrt_d;
    sq_sum += e * e;
  }
  rec.l2_traj = std::sqrt(sq_sum / static_cast<double>(sol->grid.size()));
  rec.rmse_final = (sol->y(sol->grid.size() - 1) - ref.final_state()).norm() / sqrt_d;
  if (!std::isfinite(rec.rmse_final) || !std::isfinite(rec.l2_traj)) {
    rec.diverged = true;
    rec.rmse_final = kInf;
    rec.l2_traj = kInf;
  }
  return rec;
}

std::vector<RunRecord> work_precision(const SemiLinearIVP& ivp,
                                      const std::vector<std::string>& methods,
                                      const std::vector<double>& h_list,
                                      const ReferenceSolution& ref, const BenchOptions& options) {
  if (methods.empty() || h_list.empty()) {
    throw std::invalid_argument("work_precision: need at least one method and one step size");
  }
  for (const auto& m : methods) (void)parse_method(m);

  std::vector<std::pair<std::string, double>> jobs;
  for (const auto& m : methods) {
    for (double h : h_list) jobs.emplace_back(m, h);
  }
  std::vector<RunRecord> records(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        records[i] = run_method(ivp, jobs[i].first, jobs[i].second, ref, options);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n_workers = options.workers > 0 ? options.workers : std::thread::hardware_concurrency();
  n_workers = std::clamp<unsigned>(n_workers, 1, static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return records;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return v;
}

std::string csv_header() {
  return "problem,method,q,h,steps,f_evals,jac_evals,expm_calls,wall_time_s,rmse_final,l2_traj,"
         "sigma_hat,diverged";
}

void write_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << csv_header() << '\n';
  for (const auto& r : records) {
    os << r.problem << ',' << r.method << ',' << r.q << ',' << format_double(r.h) << ','
       << r.steps << ',' << r.f_evals << ',' << r.jac_evals << ',' << r.expm_calls << ','
       << format_double(r.wall_time_s) << ',' << format_double(r.rmse_final) << ','
       << format_double(r.l2_traj) << ',' << format_double(r.sigma_hat) << ','
       << (r.diverged ? "true" : "false") << '\n';
  }
}

std::vector<RunRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != csv_header()) {
    throw std::invalid_argument("read_csv: missing or unexpected header");
  }
  std::vector<RunRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 13) {
      throw std::invalid_argument("read_csv: expected 13 fields, got " + std::to_string(f.size()));
    }
    RunRecord r;
    r.problem = f[0];
    r.method = f[1];
    r.q = static_cast<int>(parse_long(f[2]));
    r.h = parse_double(f[3]);
    r.steps = parse_long(f[4]);
    r.f_evals = parse_long(f[5]);
    r.jac_evals = parse_long(f[6]);
    r.expm_calls = parse_long(f[7]);
    r.wall_time_s = parse_double(f[8]);
    r.rmse_final = parse_double(f[9]);
    r.l2_traj = parse_double(f[10]);
    r.sigma_hat = parse_double(f[11]);
    if (f[12] == "true") {
      r.diverged = true;
    } else if (f[12] == "false") {
      r.diverged = false;
    } else {
      throw std::invalid_argument("read_csv: bad diverged flag '" + f[12] + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<StabilityRow> stability_sweep(const std::vector<std::string>& methods,
                                          const std::vector<double>& z_list,
                                          const BenchOptions& options) {
  std::vector<StabilityRow> rows;
  for (const auto& m : methods) {
    const SolverConfig config = method_config(m, 1.0, options);
    for (double z : z_list) {
      if (z > 0.0) {
        throw std::invalid_argument("stability_sweep: z must be non-positive");
      }
      rows.push_back({m, config.q, z, amplification(config, z)});
    }
  }
  return rows;
}

void write_stability_csv(std::ostream& os, const std::vector<StabilityRow>& rows) {
  os << "method,q,z,R\n";
  for (const auto& r : rows) {
    os << r.method << ',' << r.q << ',' << format_double(r.z) << ',' << format_double(r.r) << '\n';
  }
}

}  // namespace probexp
