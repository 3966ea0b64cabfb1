#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "probexp/solver.hpp"

namespace probexp {

/// Solver variants addressable from the command line.
struct MethodSpec {
  std::string tag;
  PriorChoice prior;
  LinearizationKind linearization;
};

[[nodiscard]] std::vector<std::string> method_tags();
[[nodiscard]] MethodSpec parse_method(const std::string& tag);

struct BenchOptions {
  int q = 2;
  /// Quadrature nodes; 0 means max(q, 10).
  int nodes = 0;
  bool calibrate = true;
  bool smooth = true;
  /// Timing repetitions; the median is reported.
  int repetitions = 3;
  /// Worker threads; 0 means hardware concurrency.
  unsigned workers = 0;
};

[[nodiscard]] SolverConfig method_config(const std::string& tag, double h, const BenchOptions& options);

/// Dense reference trajectory from the classic exponential trapezoidal stepper.
/// States are stored every `sample_h` (a power-of-two multiple of the step `h`)
/// and interpolated with cubic Hermite polynomials in between.
struct ReferenceSolution {
  double t0 = 0.0;
  double h = 0.0;
  double sample_h = 0.0;
  Matrix states;       // d x (stored samples)
  Matrix derivatives;  // f at the stored states
  std::string solver;
  /// Relative change of the final state at the last halving.
  double estimated_accuracy = 0.0;

  [[nodiscard]] Vector final_state() const { return states.rightCols(1); }
  [[nodiscard]] Vector eval(double t) const;
};

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Halves the step from (t_end - t0)/16 until successive final states agree
/// to `tol` relative; at most `max_halvings` halvings.
[[nodiscard]] ReferenceSolution reference(const SemiLinearIVP& ivp, double tol, int max_halvings = 20);

struct RunRecord {
  std::string problem;
  std::string method;
  int q = 0;
  double h = 0.0;
  long steps = 0;
  long f_evals = 0;
  long jac_evals = 0;
  long expm_calls = 0;
  double wall_time_s = 0.0;
  double rmse_final = 0.0;
  double l2_traj = 0.0;
  double sigma_hat = 0.0;
  bool diverged = false;
};

/// Runs one method at one step size against the reference.
[[nodiscard]] RunRecord run_method(const SemiLinearIVP& ivp, const std::string& method, double h,
                                   const ReferenceSolution& ref, const BenchOptions& options);

/// Every (method, h) pair, in method-major order. Divergence is recorded, not thrown.
[[nodiscard]] std::vector<RunRecord> work_precision(const SemiLinearIVP& ivp,
                                                    const std::vector<std::string>& methods,
                                                    const std::vector<double>& h_list,
                                                    const ReferenceSolution& ref,
                                                    const BenchOptions& options = {});

[[nodiscard]] std::string csv_header();
void write_csv(std::ostream& os, const std::vector<RunRecord>& records);
[[nodiscard]] std::vector<RunRecord> read_csv(std::istream& is);

struct StabilityRow {
  std::string method;
  int q = 0;
  double z = 0.0;
  double r = 0.0;
};

[[nodiscard]] std::vector<StabilityRow> stability_sweep(const std::vector<std::string>& methods,
                                                        const std::vector<double>& z_list,
                                                        const BenchOptions& options = {});
void write_stability_csv(std::ostream& os, const std::vector<StabilityRow>& rows);

/// Shortest representation that parses back to the same double.
[[nodiscard]] std::string format_double(double v);
[[nodiscard]] double parse_double(const std::string& s);

}  // namespace probexp
