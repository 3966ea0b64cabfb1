#include "probexp/matfun.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace probexp {

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix expm(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("expm: matrix must be square");
  }
  if (!m.allFinite()) {
    throw std::invalid_argument("expm: non-finite entry");
  }
  if (m.rows() == 0) {
    return m;
  }
  return m.exp();
}

std::vector<Matrix> phi_all(int k, const Matrix& z) {
  if (k < 0) {
    throw std::invalid_argument("phi: order must be non-negative");
  }
  if (z.rows() != z.cols()) {
    throw std::invalid_argument("phi: matrix must be square");
  }
  const Eigen::Index n = z.rows();
  if (k == 0) {
    return {expm(z)};
  }
  const Eigen::Index size = n * (k + 1);
  Matrix companion = Matrix::Zero(size, size);
  companion.topLeftCorner(n, n) = z;
  for (int j = 0; j < k; ++j) {
    companion.block(j * n, (j + 1) * n, n, n).setIdentity();
  }
  if (!companion.allFinite()) {
    throw std::invalid_argument("phi: non-finite entry");
  }

  // Scaling and squaring by hand. The trailing blocks of the companion matrix
  // are nilpotent and their exponential is a known polynomial; resetting them
  // after every squaring keeps its unit diagonal from drifting as (1 + eps)^(2^s),
  // which otherwise pollutes the phi blocks when |z| is large.
  const double norm = companion.cwiseAbs().colwise().sum().maxCoeff();
  const int s = norm > 0.5 ? static_cast<int>(std::ceil(std::log2(norm / 0.5))) : 0;
  Matrix e = (companion / std::ldexp(1.0, s)).exp();
  auto reset_tail = [&](double t) {
    for (int a = 1; a <= k; ++a) {
      for (int b = 1; b <= k; ++b) {
        auto blk = e.block(a * n, b * n, n, n);
        if (b < a) {
          blk.setZero();
        } else {
          double c = 1.0;
          for (int i = 1; i <= b - a; ++i) c *= t / i;
          blk = c * Matrix::Identity(n, n);
        }
      }
    }
  };
  reset_tail(std::ldexp(1.0, -s));
  for (int i = 1; i <= s; ++i) {
    e = (e * e).eval();
    reset_tail(std::ldexp(1.0, i - s));
  }

  std::vector<Matrix> out;
  out.reserve(k + 1);
  for (int j = 0; j <= k; ++j) {
    out.push_back(e.block(0, j * n, n, n));
  }
  return out;
}

Matrix phi(int k, const Matrix& z) { return phi_all(k, z).back(); }

namespace {

// Legendre P_m(x) and its derivative by the three-term recurrence.
std::pair<double, double> legendre(int m, double x) {
  double p0 = 1.0;
  double p1 = x;
  if (m == 0) {
    return {1.0, 0.0};
  }
  for (int j = 2; j <= m; ++j) {
    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  const double dp = m * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace

QuadratureRule gauss_legendre(int m, double a, double b) {
  if (m < 1) {
    throw std::invalid_argument("gauss_legendre: need at least one node");
  }
  if (!(a < b)) {
    throw std::invalid_argument("gauss_legendre: empty interval");
  }
  std::vector<double> x(m);
  std::vector<double> w(m);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double r = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const auto [p, d] = legendre(m, r);
      dp = d;
      const double step = p / d;
      r -= step;
      if (std::abs(step) <= 1e-16) {
        break;
      }
    }
    dp = legendre(m, r).second;
    const double weight = 2.0 / ((1.0 - r * r) * dp * dp);
    // r is the i-th largest root; mirror for the smaller half.
    x[m - 1 - i] = r;
    x[i] = -r;
    w[m - 1 - i] = weight;
    w[i] = weight;
  }
  if (m % 2 == 1) {
    x[m / 2] = 0.0;
  }
  QuadratureRule rule;
  rule.nodes.resize(m);
  rule.weights.resize(m);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (int i = 0; i < m; ++i) {
    rule.nodes[i] = mid + half * x[i];
    rule.weights[i] = half * w[i];
  }
  return rule;
}

Matrix qr_fuse(std::span<const Matrix> factors) {
  if (factors.empty()) {
    throw std::invalid_argument("qr_fuse: no factors");
  }
  const Eigen::Index rows = factors.front().rows();
  Eigen::Index cols = 0;
  for (const auto& f : factors) {
    if (f.rows() != rows) {
      throw std::invalid_argument("qr_fuse: row count mismatch (" + std::to_string(f.rows()) +
                                  " vs " + std::to_string(rows) + ")");
    }
    cols += f.cols();
  }
  Matrix stacked(cols, rows);
  Eigen::Index offset = 0;
  for (const auto& f : factors) {
    stacked.middleRows(offset, f.cols()) = f.transpose();
    offset += f.cols();
  }
  if (cols == 0) {
    return Matrix::Zero(rows, 0);
  }
  Eigen::HouseholderQR<Matrix> qr(stacked);
  const Eigen::Index k = std::min(cols, rows);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return r.transpose();
}

Matrix qr_fuse(std::initializer_list<Matrix> factors) {
  return qr_fuse(std::span<const Matrix>(factors.begin(), factors.size()));
}

}  // namespace probexp
