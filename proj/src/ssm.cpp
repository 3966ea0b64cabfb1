#include "probexp/ssm.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace probexp {

namespace {

// R factor of a thin QR of `m` (min(rows, cols) x cols, upper trapezoidal).
Matrix r_factor(const Matrix& m) {
  const Eigen::Index k = std::min(m.rows(), m.cols());
  if (m.rows() == 0) {
    return Matrix::Zero(0, m.cols());
  }
  Eigen::HouseholderQR<Matrix> qr(m);
  return qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

}  // namespace

SqrtGaussian predict(const SqrtGaussian& state, const TransitionModel& tm, double kappa) {
  if (state.dim() != tm.phi.cols() || state.cov_sqrt.rows() != state.dim()) {
    throw std::invalid_argument("predict: dimension mismatch");
  }
  if (kappa < 0.0) {
    throw std::invalid_argument("predict: kappa must be non-negative");
  }
  SqrtGaussian out;
  out.mean = tm.phi * state.mean;
  out.cov_sqrt = qr_fuse({Matrix(tm.phi * state.cov_sqrt), Matrix(kappa * tm.q_sqrt)});
  return out;
}

Linearization linearize(LinearizationKind kind, const SemiLinearIVP& ivp, int q,
                        const Vector& predicted_mean, double t, const Matrix* rate) {
  const int d = ivp.dim;
  if (predicted_mean.size() != static_cast<Eigen::Index>(d) * (q + 1)) {
    throw std::invalid_argument("linearize: state size does not match d(q+1)");
  }
  Linearization lin;
  const Vector y = predicted_mean.head(d);
  const Vector dy = predicted_mean.segment(d, d);
  const Vector fy = ivp.f(y, t);
  lin.f_evals = 1;
  switch (kind) {
    case LinearizationKind::Ek0:
      lin.jacobian = Matrix::Zero(d, d);
      break;
    case LinearizationKind::Ek1:
      if (ivp.jacobian) {
        lin.jacobian = ivp.jacobian(y, t);
      } else {
        lin.jacobian = finite_difference_jacobian(ivp.f, y, t);
        lin.finite_difference = true;
        lin.f_evals += 2 * d;
      }
      lin.jac_evals = 1;
      break;
    case LinearizationKind::Ekl:
      if (rate != nullptr) {
        lin.jacobian = *rate;
      } else if (ivp.linear) {
        lin.jacobian = *ivp.linear;
      } else {
        throw ConfigError("EKL linearization requires a semi-linear problem");
      }
      break;
  }
  lin.h = selection(d, q, 1) - lin.jacobian * selection(d, q, 0);
  lin.residual = dy - fy;
  return lin;
}

Correction correct(const SqrtGaussian& state, const Linearization& lin) {
  const Eigen::Index n = state.dim();
  const Eigen::Index d = lin.h.rows();
  if (lin.h.cols() != n || lin.residual.size() != d) {
    throw std::invalid_argument("correct: dimension mismatch");
  }
  const Matrix& f = state.cov_sqrt;
  const Eigen::Index k = f.cols();
  if (k < d) {
    throw StepFailure("correct: innovation covariance is rank deficient", 0.0);
  }

  // [ (H F)^T  F^T ] = Q [[R11, R12], [0, R22]] gives S = R11^T R11,
  // K = R12^T R11^-T and the posterior factor R22^T.
  Matrix pre(k, d + n);
  pre.leftCols(d) = (lin.h * f).transpose();
  pre.rightCols(n) = f.transpose();
  const Matrix r = r_factor(pre);

  const auto r11 = r.topLeftCorner(d, d);
  const double dmax = r11.diagonal().cwiseAbs().maxCoeff();
  const double dmin = r11.diagonal().cwiseAbs().minCoeff();
  double conditioning = std::numeric_limits<double>::quiet_NaN();
  if (r11.allFinite()) {
    conditioning = dmax > 0.0 ? dmin / dmax : 0.0;
  }
  if (!(conditioning > 1e-14)) {
    throw StepFailure("correct: innovation covariance is singular to working precision",
                      conditioning);
  }

  Correction out;
  out.stats.s_sqrt = r11.transpose();
  out.stats.residual = lin.residual;
  out.stats.whitened =
      r11.transpose().triangularView<Eigen::Lower>().solve(lin.residual);
  out.state.mean = state.mean - r.block(0, d, d, n).transpose() * out.stats.whitened;
  const Eigen::Index rest = r.rows() - d;
  out.state.cov_sqrt = r.bottomRightCorner(rest, n).transpose();
  if (rest == 0) {
    out.state.cov_sqrt = Matrix::Zero(n, 1);
  }
  return out;
}

SqrtGaussian BackwardTransition::apply(const SqrtGaussian& next) const {
  SqrtGaussian out;
  out.mean = gain * next.mean + shift;
  out.cov_sqrt = qr_fuse({Matrix(gain * next.cov_sqrt), noise_sqrt});
  return out;
}

BackwardTransition backward_transition(const SqrtGaussian& filtered, const TransitionModel& tm,
                                       double kappa) {
  const Eigen::Index n = filtered.dim();
  if (tm.phi.rows() != n) {
    throw std::invalid_argument("backward_transition: dimension mismatch");
  }
  const Vector t = tm.precond.size() == n ? tm.precond : Vector::Ones(n);
  const Vector t_inv = t.cwiseInverse();

  // Work in the preconditioned coordinates Y = T Y_bar.
  const Matrix f = t_inv.asDiagonal() * filtered.cov_sqrt;
  const Matrix phi = t_inv.asDiagonal() * tm.phi * t.asDiagonal();
  const Matrix qs = kappa * (t_inv.asDiagonal() * tm.q_sqrt);

  const Eigen::Index kf = f.cols();
  const Eigen::Index kq = qs.cols();
  Matrix pre = Matrix::Zero(kf + kq, 2 * n);
  pre.topLeftCorner(kf, n) = (phi * f).transpose();
  pre.topRightCorner(kf, n) = f.transpose();
  pre.bottomLeftCorner(kq, n) = qs.transpose();
  const Matrix r = r_factor(pre);

  const Eigen::Index r1 = std::min(r.rows(), n);
  const Matrix r1t = r.topLeftCorner(r1, n).transpose();  // n x r1, sqrt of predicted cov
  const Matrix r2 = r.block(0, n, r1, n);
  const Eigen::Index rest = r.rows() - r1;

  // G_bar = R2^T R1^-T. The triangular solve covers the usual full-rank case;
  // a rank-revealing pseudo-inverse handles degenerate predicted covariances.
  Matrix gain_bar;
  const auto diag = r.topLeftCorner(r1, r1).diagonal().cwiseAbs();
  if (r1 == n && diag.minCoeff() > 1e-12 * diag.maxCoeff()) {
    gain_bar = r.topLeftCorner(n, n).triangularView<Eigen::Upper>().solve(r2).transpose();
  } else {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(r1t);
    cod.setThreshold(1e-12);
    gain_bar = r2.transpose() * cod.pseudoInverse();
  }

  BackwardTransition bt;
  bt.gain = t.asDiagonal() * gain_bar * t_inv.asDiagonal();
  bt.shift = filtered.mean - bt.gain * (tm.phi * filtered.mean);
  if (rest > 0) {
    bt.noise_sqrt = t.asDiagonal() * r.bottomRightCorner(rest, n).transpose();
  } else {
    bt.noise_sqrt = Matrix::Zero(n, 1);
  }
  return bt;
}

SmootherResult smooth(std::span<const SqrtGaussian> filtered,
                      std::span<const TransitionModel> transitions, double kappa) {
  if (filtered.empty()) {
    throw std::invalid_argument("smooth: no states");
  }
  if (transitions.size() + 1 != filtered.size()) {
    throw std::invalid_argument("smooth: need one transition per step");
  }
  SmootherResult out;
  const std::size_t steps = transitions.size();
  out.states.resize(steps + 1);
  out.backward.resize(steps);
  out.states[steps] = filtered[steps];
  for (std::size_t i = steps; i-- > 0;) {
    out.backward[i] = backward_transition(filtered[i], transitions[i], kappa);
    out.states[i] = out.backward[i].apply(out.states[i + 1]);
  }
  return out;
}

std::vector<Vector> sample(const SqrtGaussian& last, std::span<const BackwardTransition> backward,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto draw = [&](Eigen::Index size) {
    Vector z(size);
    for (Eigen::Index i = 0; i < size; ++i) z[i] = normal(rng);
    return z;
  };
  std::vector<Vector> path(backward.size() + 1);
  path.back() = last.mean + last.cov_sqrt * draw(last.cov_sqrt.cols());
  for (std::size_t i = backward.size(); i-- > 0;) {
    const auto& b = backward[i];
    path[i] = b.gain * path[i + 1] + b.shift + b.noise_sqrt * draw(b.noise_sqrt.cols());
  }
  return path;
}

void CalibrationAccumulator::add(const CorrectionStats& stats) {
  add(stats.whitened.squaredNorm(), static_cast<long>(stats.whitened.size()));
}

void CalibrationAccumulator::add(double whitened_sq_norm, long count) {
  sum_ += whitened_sq_norm;
  count_ += count;
}

double calibrate(const CalibrationAccumulator& acc) {
  if (acc.count() <= 0) {
    throw std::logic_error("calibrate: no residuals accumulated");
  }
  return std::sqrt(acc.sum() / static_cast<double>(acc.count()));
}

}  // namespace probexp
