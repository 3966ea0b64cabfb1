#include "probexp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace probexp {

namespace {

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

bool finite_state(const SqrtGaussian& s) { return s.mean.allFinite() && s.cov_sqrt.allFinite(); }

Matrix rate_jacobian(const SemiLinearIVP& ivp, const Vector& y, double t, WorkCounters& work) {
  ++work.jac_evals;
  if (ivp.jacobian) {
    return ivp.jacobian(y, t);
  }
  work.f_evals += 2L * ivp.dim;
  return finite_difference_jacobian(ivp.f, y, t);
}

void validate(const SemiLinearIVP& ivp, const SolverConfig& config) {
  if (config.q < 1) {
    throw ConfigError("solver: q must be at least 1");
  }
  if (config.kappa < 0.0) {
    throw ConfigError("solver: kappa must be non-negative");
  }
  if (config.linearization == LinearizationKind::Ekl && !ivp.has_split() &&
      config.prior != PriorChoice::IoupRosenbrock) {
    throw ConfigError("solver: EKL linearization requires a semi-linear problem");
  }
  if (config.prior == PriorChoice::Ioup && !ivp.has_split()) {
    throw ConfigError("solver: IOUP prior requires the problem's linear part as rate");
  }
}

}  // namespace

SqrtGaussian init_state(const SemiLinearIVP& ivp, int q, InitMode mode) {
  const int d = ivp.dim;
  if (ivp.y0.size() != d) {
    throw InitializationError("init_state: initial value has wrong dimension");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(d) * (q + 1);
  SqrtGaussian s;
  s.mean = Vector::Zero(n);
  s.cov_sqrt = Matrix::Zero(n, n);
  s.mean.head(d) = ivp.y0;

  if (mode == InitMode::Extended) {
    Vector f0;
    try {
      f0 = ivp.f(ivp.y0, ivp.t0);
    } catch (const std::exception& e) {
      throw InitializationError(std::string("init_state: vector field failed: ") + e.what());
    }
    if (!f0.allFinite()) {
      throw InitializationError("init_state: vector field not finite at the initial value");
    }
    s.mean.segment(d, d) = f0;
    for (Eigen::Index i = 2L * d; i < n; ++i) {
      s.cov_sqrt(i, i) = 1e3;
    }
    return s;
  }

  if (!ivp.f_jet) {
    throw ConfigError("init_state: exact initialization needs a jet-evaluable vector field");
  }
  // Taylor coefficients c_k of y(t0 + s); y^(k)(t0) = k! c_k.
  std::vector<std::vector<double>> coeffs(d);
  for (int i = 0; i < d; ++i) coeffs[i] = {ivp.y0[i]};
  for (int k = 0; k < q; ++k) {
    std::vector<Jet> y(d);
    for (int i = 0; i < d; ++i) y[i] = Jet(coeffs[i]);
    std::vector<Jet> fy;
    try {
      fy = ivp.f_jet(y, Jet::variable(k, ivp.t0));
    } catch (const std::exception& e) {
      throw InitializationError(std::string("init_state: vector field failed: ") + e.what());
    }
    for (int i = 0; i < d; ++i) {
      coeffs[i].push_back(fy[i][k] / (k + 1));
    }
  }
  for (int k = 1; k <= q; ++k) {
    for (int i = 0; i < d; ++i) {
      s.mean[k * d + i] = factorial(k) * coeffs[i][k];
    }
  }
  if (!s.mean.allFinite()) {
    throw InitializationError("init_state: vector field not finite at the initial value");
  }
  return s;
}

std::vector<double> make_grid(const SemiLinearIVP& ivp, const SolverConfig& config) {
  std::vector<double> grid;
  if (!config.grid.empty()) {
    grid = config.grid;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (!(grid[i] > grid[i - 1])) {
        throw ConfigError("solver: grid must be strictly increasing");
      }
    }
    return grid;
  }
  if (!(config.h > 0.0)) {
    throw ConfigError("solver: step size must be positive");
  }
  const double span = ivp.t_end - ivp.t0;
  const auto steps = static_cast<long>(std::ceil(span / config.h - 1e-9));
  grid.reserve(steps + 1);
  for (long n = 0; n < steps; ++n) {
    grid.push_back(ivp.t0 + n * config.h);
  }
  grid.push_back(ivp.t_end);
  return grid;
}

GaussMarkovPrior build_prior(const SemiLinearIVP& ivp, const SolverConfig& config) {
  switch (config.prior) {
    case PriorChoice::Iwp:
      return make_iwp(ivp.dim, config.q);
    case PriorChoice::Ioup:
      return make_ioup(ivp.dim, config.q, *ivp.linear);
    case PriorChoice::IoupRosenbrock:
      return make_ioup(ivp.dim, config.q, Matrix::Zero(ivp.dim, ivp.dim));
  }
  throw ConfigError("unknown prior");
}

StepResult filter_step(const SemiLinearIVP& ivp, const SqrtGaussian& state, double t_next,
                       const TransitionModel& tm, const SolverConfig& config, const Matrix* rate) {
  StepResult r;
  r.predicted = predict(state, tm, config.kappa);
  const Linearization lin =
      linearize(config.linearization, ivp, config.q, r.predicted.mean, t_next, rate);
  r.work.f_evals += lin.f_evals;
  r.work.jac_evals += lin.jac_evals;
  Correction c = correct(r.predicted, lin);
  r.filtered = std::move(c.state);
  r.stats = std::move(c.stats);
  return r;
}

RosenbrockStep rosenbrock_step(const SemiLinearIVP& ivp, const SqrtGaussian& state, double t,
                               double h, const SolverConfig& config) {
  RosenbrockStep out;
  WorkCounters work;
  out.rate = rate_jacobian(ivp, state.mean.head(ivp.dim), t, work);
  const GaussMarkovPrior prior = make_ioup(ivp.dim, config.q, out.rate);
  out.transition = discretize(prior, h, {config.nodes});
  work.expm_calls += out.transition.expm_calls;
  out.step = filter_step(ivp, state, t + h, out.transition, config, &out.rate);
  out.step.work += work;
  return out;
}

ProbabilisticSolution solve(const SemiLinearIVP& ivp, const SolverConfig& config) {
  validate(ivp, config);
  ProbabilisticSolution sol;
  sol.config = config;
  sol.grid = make_grid(ivp, config);
  sol.prior = build_prior(ivp, config);
  const bool rosenbrock = config.prior == PriorChoice::IoupRosenbrock;

  sol.filtered.reserve(sol.grid.size());
  sol.filtered.push_back(init_state(ivp, config.q, config.init));
  sol.work.f_evals += config.init == InitMode::Exact ? config.q : 1;

  std::map<double, TransitionModel> cache;
  auto transition_for = [&](double h) -> const TransitionModel& {
    auto it = cache.find(h);
    if (it == cache.end()) {
      it = cache.emplace(h, discretize(sol.prior, h, {config.nodes})).first;
      sol.work.expm_calls += it->second.expm_calls;
    }
    return it->second;
  };

  // The rate of the IOUP prior used for EKL (the problem's linear part).
  const Matrix* fixed_rate =
      config.prior == PriorChoice::Ioup ? &sol.prior.rate : nullptr;

  CalibrationAccumulator acc;
  const std::size_t steps = sol.grid.size() - 1;
  if (config.smooth) sol.backward.reserve(steps);
  sol.residual_norms.reserve(steps);

  for (std::size_t n = 0; n < steps; ++n) {
    const double t = sol.grid[n];
    const double h = sol.grid[n + 1] - t;
    const SqrtGaussian& current = sol.filtered.back();
    StepResult r;
    try {
      if (rosenbrock) {
        RosenbrockStep rb = rosenbrock_step(ivp, current, t, h, config);
        if (config.smooth) {
          sol.backward.push_back(backward_transition(current, rb.transition, config.kappa));
        }
        if (n == 0) sol.prior = make_ioup(ivp.dim, config.q, rb.rate);
        sol.step_rates.push_back(std::move(rb.rate));
        r = std::move(rb.step);
      } else {
        const TransitionModel& tm = transition_for(h);
        if (config.smooth) {
          sol.backward.push_back(backward_transition(current, tm, config.kappa));
        }
        r = filter_step(ivp, current, t + h, tm, config, fixed_rate);
      }
    } catch (const StepFailure& e) {
      if (std::isnan(e.conditioning())) {
        // Overflow in the prediction surfaces as a NaN innovation factor.
        throw DivergenceError("solver diverged at step " + std::to_string(n + 1), n + 1,
                              sol.grid[n + 1], current, sol.work);
      }
      throw StepFailure("step " + std::to_string(n) + ": " + e.what(), e.conditioning());
    }
    sol.work += r.work;
    if (!finite_state(r.filtered) || !r.stats.whitened.allFinite()) {
      throw DivergenceError("solver diverged at step " + std::to_string(n + 1) + " (t = " +
                                std::to_string(sol.grid[n + 1]) + ")",
                            n + 1, sol.grid[n + 1], sol.filtered.back(), sol.work);
    }
    acc.add(r.stats);
    sol.residual_norms.push_back(r.stats.residual.norm());
    sol.filtered.push_back(std::move(r.filtered));
  }

  sol.sigma_hat = 1.0;
  if (config.calibrate && acc.count() > 0) {
    sol.sigma_hat = calibrate(acc);
  }

  if (config.smooth) {
    sol.smoothed.resize(sol.filtered.size());
    sol.smoothed.back() = sol.filtered.back();
    for (std::size_t n = steps; n-- > 0;) {
      sol.smoothed[n] = sol.backward[n].apply(sol.smoothed[n + 1]);
    }
  }

  if (config.calibrate) {
    const double s = sol.sigma_hat;
    for (auto& st : sol.filtered) st.cov_sqrt *= s;
    for (auto& st : sol.smoothed) st.cov_sqrt *= s;
    for (auto& b : sol.backward) b.noise_sqrt *= s;
  }
  sol.diffusion = config.kappa * (config.calibrate ? sol.sigma_hat : 1.0);
  return sol;
}

SqrtGaussian dense_eval(const ProbabilisticSolution& sol, double t) {
  const auto& grid = sol.grid;
  if (grid.empty() || t < grid.front() || t > grid.back() || std::isnan(t)) {
    throw std::out_of_range("dense_eval: time outside the solution grid");
  }
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  const std::size_t n = static_cast<std::size_t>(it - grid.begin()) - 1;
  if (grid[n] == t) {
    return sol.states()[n];
  }
  const GaussMarkovPrior prior = sol.step_rates.empty()
                                     ? sol.prior
                                     : make_ioup(sol.prior.d, sol.prior.q, sol.step_rates[n]);
  const DiscretizeOptions opts{sol.config.nodes};
  const TransitionModel to_t = discretize(prior, t - grid[n], opts);
  const SqrtGaussian extrapolated = predict(sol.filtered[n], to_t, sol.diffusion);
  if (sol.smoothed.empty()) {
    return extrapolated;
  }
  const TransitionModel to_next = discretize(prior, grid[n + 1] - t, opts);
  return backward_transition(extrapolated, to_next, sol.diffusion).apply(sol.smoothed[n + 1]);
}

ClassicStepper::ClassicStepper(const SemiLinearIVP& ivp, double h, ClassicScheme scheme)
    : ivp_(&ivp), h_(h), scheme_(scheme) {
  if (!ivp.has_split()) {
    throw ConfigError("ClassicStepper: problem has no semi-linear split");
  }
  if (!(h > 0.0)) {
    throw std::invalid_argument("ClassicStepper: step size must be positive");
  }
  const std::vector<Matrix> phis = phi_all(2, *ivp.linear * h);
  phi0_ = phis[0];
  phi1_ = phis[1];
  phi2_ = phis[2];
}

std::pair<Vector, Vector> ClassicStepper::step(const Vector& y, const Vector& y_tilde, double t) {
  const auto& nl = ivp_->nonlinear;
  if (scheme_ == ClassicScheme::ExponentialEuler) {
    ++n_evals_;
    Vector next = phi0_ * y + h_ * (phi1_ * nl(y, t));
    return {next, next};
  }
  const Vector n_tilde = nl(y_tilde, t);
  Vector predicted = phi0_ * y + h_ * (phi1_ * n_tilde);
  const Vector n_pred = nl(predicted, t + h_);
  n_evals_ += 2;
  Vector corrected = predicted + h_ * (phi2_ * (n_pred - n_tilde));
  return {std::move(corrected), std::move(predicted)};
}

std::pair<Vector, Vector> classic_step(ClassicStepper& stepper, const Vector& y,
                                       const Vector& y_tilde, double t) {
  return stepper.step(y, y_tilde, t);
}

double amplification(const SolverConfig& config, double z) {
  const SemiLinearIVP ivp = linear_test(z);
  SolverConfig cfg = config;
  cfg.grid = {0.0, 1.0};
  cfg.calibrate = false;
  cfg.smooth = false;
  cfg.init = InitMode::Exact;
  try {
    const ProbabilisticSolution sol = solve(ivp, cfg);
    return sol.filtered.back().mean[0] / ivp.y0[0];
  } catch (const DivergenceError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace probexp
