#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "probexp/priors.hpp"
#include "probexp/problems.hpp"
#include "probexp/ssm.hpp"

namespace probexp {

enum class PriorChoice { Iwp, Ioup, IoupRosenbrock };
enum class InitMode { Exact, Extended };

struct SolverConfig {
  PriorChoice prior = PriorChoice::Ioup;
  int q = 1;
  LinearizationKind linearization = LinearizationKind::Ekl;
  /// Equidistant step; the last step is shortened to land on t_end.
  double h = 0.1;
  /// Explicit grid, used instead of `h` when non-empty.
  std::vector<double> grid;
  /// Quadrature nodes for IOUP process noise; 0 means m = q.
  int nodes = 0;
  bool calibrate = true;
  bool smooth = true;
  InitMode init = InitMode::Exact;
  /// Diffusion scale used during the forward pass.
  double kappa = 1.0;
};

struct WorkCounters {
  long f_evals = 0;
  long jac_evals = 0;
  long expm_calls = 0;

  WorkCounters& operator+=(const WorkCounters& o) {
    f_evals += o.f_evals;
    jac_evals += o.jac_evals;
    expm_calls += o.expm_calls;
    return *this;
  }
};

struct ProbabilisticSolution {
  std::vector<double> grid;
  std::vector<SqrtGaussian> filtered;
  std::vector<SqrtGaussian> smoothed;        // empty when smoothing is off
  std::vector<BackwardTransition> backward;  // smoother conditionals, one per step
  double sigma_hat = 1.0;
  /// Process-noise scale matching the stored covariances (kappa * sigma_hat).
  double diffusion = 1.0;
  WorkCounters work;
  std::vector<double> residual_norms;

  SolverConfig config;
  GaussMarkovPrior prior;          // IOUP rate of the first step for Rosenbrock runs
  std::vector<Matrix> step_rates;  // per-step IOUP rates, Rosenbrock only

  /// Smoothed states if available, filtered otherwise.
  [[nodiscard]] const std::vector<SqrtGaussian>& states() const {
    return smoothed.empty() ? filtered : smoothed;
  }
  /// E_0 of the posterior mean at grid point n.
  [[nodiscard]] Vector y(std::size_t n) const { return states()[n].mean.head(prior.d); }
};

/// Raised when the state becomes non-finite; carries the last finite state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t step, double time, SqrtGaussian last,
                  WorkCounters work = {})
      : std::runtime_error(what), step_(step), time_(time), last_(std::move(last)), work_(work) {}
  [[nodiscard]] std::size_t step() const { return step_; }
  [[nodiscard]] double time() const { return time_; }
  [[nodiscard]] const SqrtGaussian& last_finite() const { return last_; }
  /// Work spent up to and including the failing step.
  [[nodiscard]] const WorkCounters& work() const { return work_; }

 private:
  std::size_t step_;
  double time_;
  SqrtGaussian last_;
  WorkCounters work_;
};

class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Initial state with block 0 = y0 and zero covariance on the exact blocks.
/// Exact mode propagates a Taylor jet through f to get all q derivatives.
SqrtGaussian init_state(const SemiLinearIVP& ivp, int q, InitMode mode = InitMode::Exact);

/// Time grid implied by the configuration.
std::vector<double> make_grid(const SemiLinearIVP& ivp, const SolverConfig& config);

/// Prior for a given rate matrix (ignored for IWP).
GaussMarkovPrior build_prior(const SemiLinearIVP& ivp, const SolverConfig& config);

struct StepResult {
  SqrtGaussian predicted;
  SqrtGaussian filtered;
  CorrectionStats stats;
  WorkCounters work;
};

/// One predict / linearize / correct cycle on a given transition.
StepResult filter_step(const SemiLinearIVP& ivp, const SqrtGaussian& state, double t_next,
                       const TransitionModel& tm, const SolverConfig& config,
                       const Matrix* rate = nullptr);

struct RosenbrockStep {
  StepResult step;
  TransitionModel transition;
  Matrix rate;  // J_n = df/dy at E_0 mu_n
};

/// Re-linearizes f at the filtering mean, rebuilds the IOUP prior with that
/// Jacobian as rate, re-discretizes, then runs one filter step.
RosenbrockStep rosenbrock_step(const SemiLinearIVP& ivp, const SqrtGaussian& state, double t,
                               double h, const SolverConfig& config);

ProbabilisticSolution solve(const SemiLinearIVP& ivp, const SolverConfig& config);

/// Posterior marginal at an arbitrary time inside the grid.
SqrtGaussian dense_eval(const ProbabilisticSolution& solution, double t);

enum class ClassicScheme { ExponentialEuler, ExponentialTrapezoidalPec };

/// Classic exponential integrator for y' = L y + N(y, t) at a fixed step.
class ClassicStepper {
 public:
  ClassicStepper(const SemiLinearIVP& ivp, double h,
                 ClassicScheme scheme = ClassicScheme::ExponentialTrapezoidalPec);

  [[nodiscard]] double h() const { return h_; }
  [[nodiscard]] ClassicScheme scheme() const { return scheme_; }
  [[nodiscard]] long nonlinear_evals() const { return n_evals_; }

  /// (y_{n+1}, ytilde_{n+1}) from (y_n, ytilde_n) at time t_n.
  std::pair<Vector, Vector> step(const Vector& y, const Vector& y_tilde, double t);

 private:
  const SemiLinearIVP* ivp_;
  double h_;
  ClassicScheme scheme_;
  Matrix phi0_;
  Matrix phi1_;
  Matrix phi2_;
  long n_evals_ = 0;
};

std::pair<Vector, Vector> classic_step(ClassicStepper& stepper, const Vector& y,
                                       const Vector& y_tilde, double t = 0.0);

/// Empirical stability function: E_0 mu_1 / y_0 after one unit step on y' = z y.
double amplification(const SolverConfig& config, double z);

}  // namespace probexp
