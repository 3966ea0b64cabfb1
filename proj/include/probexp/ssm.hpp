#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "probexp/priors.hpp"
#include "probexp/problems.hpp"

namespace probexp {

/// Gaussian N(mean, cov_sqrt cov_sqrt^T). The factor may be rectangular.
struct SqrtGaussian {
  Vector mean;
  Matrix cov_sqrt;

  [[nodiscard]] Matrix cov() const { return cov_sqrt * cov_sqrt.transpose(); }
  [[nodiscard]] Eigen::Index dim() const { return mean.size(); }
};

/// Correction could not be carried out because S = H Sigma H^T is singular.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, double conditioning)
      : std::runtime_error(what), conditioning_(conditioning) {}
  /// Ratio of smallest to largest diagonal entry of the triangular S factor.
  [[nodiscard]] double conditioning() const { return conditioning_; }

 private:
  double conditioning_;
};

/// A solver configuration cannot be honoured by the given problem.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

SqrtGaussian predict(const SqrtGaussian& state, const TransitionModel& tm, double kappa);

enum class LinearizationKind { Ek0, Ek1, Ekl };

/// Linearized information operator Y -> H Y + b around the predicted mean,
/// with residual = H mu + b = E_1 mu - f(E_0 mu, t).
struct Linearization {
  Matrix h;
  Vector residual;
  Matrix jacobian;  // F_y
  bool finite_difference = false;
  int f_evals = 0;
  int jac_evals = 0;
};

/// `rate` overrides the EKL Jacobian (the IOUP rate for Rosenbrock steps);
/// otherwise EKL uses the problem's linear part.
Linearization linearize(LinearizationKind kind, const SemiLinearIVP& ivp, int q,
                        const Vector& predicted_mean, double t, const Matrix* rate = nullptr);

struct CorrectionStats {
  Matrix s_sqrt;
  Vector residual;
  Vector whitened;
};

struct Correction {
  SqrtGaussian state;
  CorrectionStats stats;
};

/// Noiseless update on H Y + b = 0, in square-root array form.
Correction correct(const SqrtGaussian& state, const Linearization& lin);

/// Y_n | Y_{n+1} ~ N(gain Y_{n+1} + shift, noise_sqrt noise_sqrt^T).
struct BackwardTransition {
  Matrix gain;
  Vector shift;
  Matrix noise_sqrt;

  [[nodiscard]] SqrtGaussian apply(const SqrtGaussian& next) const;
};

/// Reverse conditional of one forward transition, from the filtering state.
/// Directions of the predicted covariance below 1e-12 of its largest
/// singular value are truncated when forming the gain.
BackwardTransition backward_transition(const SqrtGaussian& filtered, const TransitionModel& tm,
                                       double kappa);

struct SmootherResult {
  std::vector<SqrtGaussian> states;
  std::vector<BackwardTransition> backward;
};

/// Rauch-Tung-Striebel pass over N+1 filtering states and N transitions.
SmootherResult smooth(std::span<const SqrtGaussian> filtered,
                      std::span<const TransitionModel> transitions, double kappa);

/// Joint posterior sample drawn backwards through the smoother's conditionals.
std::vector<Vector> sample(const SqrtGaussian& last, std::span<const BackwardTransition> backward,
                           std::uint64_t seed);

/// Quasi maximum-likelihood estimate of the global diffusion scale.
class CalibrationAccumulator {
 public:
  void add(const CorrectionStats& stats);
  void add(double whitened_sq_norm, long count);
  [[nodiscard]] long count() const { return count_; }
  [[nodiscard]] double sum() const { return sum_; }

 private:
  double sum_ = 0.0;
  long count_ = 0;
};

/// sigma_hat = sqrt(sum / count). Throws std::logic_error when empty.
double calibrate(const CalibrationAccumulator& acc);

}  // namespace probexp
