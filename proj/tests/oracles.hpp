#pragma once

// Reference implementations used only by the tests. They are deliberately
// naive: dense covariances, explicit inverses, truncated power series.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                            double scale = 1.0) {
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * n(rng);
  return m;
}

// Random d x d matrix rescaled so that its spectral radius equals `radius`.
inline Matrix random_with_radius(std::mt19937_64& rng, int d, double radius) {
  Matrix m = random_matrix(rng, d, d);
  const double rho = m.eigenvalues().cwiseAbs().maxCoeff();
  return m * (radius / rho);
}

// Random matrix with spectral abscissa -0.1 and spectral radius at most ~2 * radius,
// so that a prior built on it does not grow over long chains.
inline Matrix random_stable(std::mt19937_64& rng, int d, double radius) {
  const Matrix m = random_with_radius(rng, d, radius);
  const double abscissa = m.eigenvalues().real().maxCoeff();
  return m - (abscissa + 0.1) * Matrix::Identity(d, d);
}

inline double rel_fro(const Matrix& a, const Matrix& b) {
  const double nb = b.norm();
  return (a - b).norm() / (nb > 0.0 ? nb : 1.0);
}

// exp(M) by scaling, a long Taylor sum and squaring.
inline Matrix taylor_expm(const Matrix& m) {
  int s = 0;
  double norm = m.lpNorm<Eigen::Infinity>();
  while (norm > 0.25) {
    norm /= 2.0;
    ++s;
  }
  const Matrix a = m / std::ldexp(1.0, s);
  Matrix term = Matrix::Identity(m.rows(), m.cols());
  Matrix sum = term;
  for (int k = 1; k < 40; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// phi_k(z) for scalar z via its power series sum_j z^j / (j + k)!.
inline double phi_scalar(int k, double z) {
  double sum = 0.0;
  double zj = 1.0;
  for (int j = 0; j < 60; ++j) {
    sum += zj / factorial(j + k);
    zj *= z;
  }
  return sum;
}

struct Gaussian {
  Vector mean;
  Matrix cov;
};

// Linear-Gaussian chain x_{n+1} = A x_n + w, w ~ N(0, Q); observations
// y_n = H x_n + r_n exactly (noiseless) for n >= 1.
struct Chain {
  Matrix a;
  Matrix q;
  Matrix h;
  std::vector<Vector> y;  // y[0] unused
  Gaussian x0;
};

// Covariance-form Kalman filter with explicit inverses.
inline std::vector<Gaussian> dense_filter(const Chain& c) {
  std::vector<Gaussian> out{c.x0};
  for (std::size_t n = 1; n < c.y.size(); ++n) {
    const Gaussian& prev = out.back();
    Vector m = c.a * prev.mean;
    Matrix p = c.a * prev.cov * c.a.transpose() + c.q;
    const Matrix s = c.h * p * c.h.transpose();
    const Matrix k = s.ldlt().solve(c.h * p).transpose();
    m += k * (c.y[n] - c.h * m);
    p = p - k * s * k.transpose();
    out.push_back({m, 0.5 * (p + p.transpose())});
  }
  return out;
}

// Smoothing marginals by conditioning the joint Gaussian of all states on all
// observations at once.
inline std::vector<Gaussian> batch_posterior(const Chain& c) {
  const Eigen::Index n = c.a.rows();
  const std::size_t steps = c.y.size() - 1;
  const Eigen::Index total = n * static_cast<Eigen::Index>(steps + 1);

  Vector mean(total);
  Matrix cov = Matrix::Zero(total, total);
  std::vector<Matrix> powers{Matrix::Identity(n, n)};
  mean.head(n) = c.x0.mean;
  std::vector<Matrix> marg{c.x0.cov};
  for (std::size_t i = 1; i <= steps; ++i) {
    mean.segment(n * i, n) = c.a * mean.segment(n * (i - 1), n);
    marg.push_back(c.a * marg.back() * c.a.transpose() + c.q);
    powers.push_back(c.a * powers.back());
  }
  for (std::size_t i = 0; i <= steps; ++i) {
    for (std::size_t j = i; j <= steps; ++j) {
      // Cov(x_j, x_i) = A^(j - i) Cov(x_i)
      const Matrix block = powers[j - i] * marg[i];
      cov.block(n * j, n * i, n, n) = block;
      cov.block(n * i, n * j, n, n) = block.transpose();
    }
  }

  const Eigen::Index m = c.h.rows();
  Matrix big_h = Matrix::Zero(m * steps, total);
  Vector obs(m * steps);
  for (std::size_t i = 1; i <= steps; ++i) {
    big_h.block(m * (i - 1), n * i, m, n) = c.h;
    obs.segment(m * (i - 1), m) = c.y[i];
  }
  const Matrix s = big_h * cov * big_h.transpose();
  const Matrix gain = s.ldlt().solve(big_h * cov).transpose();
  const Vector post_mean = mean + gain * (obs - big_h * mean);
  const Matrix post_cov = cov - gain * s * gain.transpose();

  std::vector<Gaussian> out;
  for (std::size_t i = 0; i <= steps; ++i) {
    out.push_back({post_mean.segment(n * i, n), post_cov.block(n * i, n * i, n, n)});
  }
  return out;
}

}  // namespace oracle
