#include "probexp/priors.hpp"

#include <cmath>
#include <stdexcept>

namespace probexp {

namespace {

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) {
    r *= i;
  }
  return r;
}

// Kronecker product M (x) I_d for a small dense M.
Matrix kron_identity(const Matrix& m, int d) {
  Matrix out = Matrix::Zero(m.rows() * d, m.cols() * d);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) {
        out.block(i * d, j * d, d, d).diagonal().setConstant(m(i, j));
      }
    }
  }
  return out;
}

Vector iwp_preconditioner(int d, int q, double h) {
  Vector t(static_cast<Eigen::Index>(d) * (q + 1));
  for (int i = 0; i <= q; ++i) {
    t.segment(i * d, d).setConstant(std::sqrt(h) * std::pow(h, q - i) / factorial(q - i));
  }
  return t;
}

}  // namespace

Matrix selection(int d, int q, int i) {
  if (i < 0 || i > q) {
    throw std::invalid_argument("selection: block index out of range");
  }
  Matrix e = Matrix::Zero(d, static_cast<Eigen::Index>(d) * (q + 1));
  e.block(0, static_cast<Eigen::Index>(i) * d, d, d).setIdentity();
  return e;
}

GaussMarkovPrior make_iwp(int d, int q) {
  if (d < 1 || q < 1) {
    throw std::invalid_argument("make_iwp: need d >= 1 and q >= 1");
  }
  GaussMarkovPrior p;
  p.kind = PriorKind::Iwp;
  p.d = d;
  p.q = q;
  const Eigen::Index n = p.state_dim();
  p.drift = Matrix::Zero(n, n);
  for (int i = 0; i < q; ++i) {
    p.drift.block(i * d, (i + 1) * d, d, d).setIdentity();
  }
  p.dispersion = Matrix::Zero(n, d);
  p.dispersion.bottomRows(d).setIdentity();
  return p;
}

GaussMarkovPrior make_ioup(int d, int q, const Matrix& rate) {
  if (rate.rows() != d || rate.cols() != d) {
    throw std::invalid_argument("make_ioup: rate matrix must be d x d");
  }
  if (!rate.allFinite()) {
    throw std::invalid_argument("make_ioup: non-finite rate matrix");
  }
  GaussMarkovPrior p = make_iwp(d, q);
  p.kind = PriorKind::Ioup;
  p.rate = rate;
  p.drift.bottomRightCorner(d, d) = rate;
  return p;
}

Matrix iwp_process_noise(int d, int q, double h) {
  Matrix base(q + 1, q + 1);
  for (int i = 0; i <= q; ++i) {
    for (int j = 0; j <= q; ++j) {
      const int p = 2 * q + 1 - i - j;
      base(i, j) = std::pow(h, p) / (p * factorial(q - i) * factorial(q - j));
    }
  }
  return kron_identity(base, d);
}

TransitionModel discretize(const GaussMarkovPrior& prior, double h,
                           const DiscretizeOptions& options) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("discretize: step size must be positive");
  }
  const int d = prior.d;
  const int q = prior.q;
  TransitionModel tm;
  tm.h = h;

  if (prior.kind == PriorKind::Iwp) {
    // Preconditioned coordinates: Phi = T Phi_bar T^-1, Q = T Q_bar T with
    // Phi_bar and Q_bar independent of h.
    Matrix phi_bar = Matrix::Zero(q + 1, q + 1);
    Matrix q_bar(q + 1, q + 1);
    for (int i = 0; i <= q; ++i) {
      for (int j = 0; j <= q; ++j) {
        if (j >= i) {
          phi_bar(i, j) = factorial(q - i) / (factorial(j - i) * factorial(q - j));
        }
        q_bar(i, j) = 1.0 / (2 * q + 1 - i - j);
      }
    }
    const Eigen::LLT<Matrix> chol(q_bar);
    if (chol.info() != Eigen::Success) {
      throw std::runtime_error("discretize: Cholesky of preconditioned IWP noise failed");
    }
    const Matrix q_bar_sqrt = chol.matrixL();
    tm.precond = iwp_preconditioner(d, q, h);
    const auto t = tm.precond.asDiagonal();
    const Vector t_inv = tm.precond.cwiseInverse();
    tm.phi = t * kron_identity(phi_bar, d) * t_inv.asDiagonal();
    tm.q_sqrt = t * kron_identity(q_bar_sqrt, d);
    return tm;
  }

  // Block form of exp(A h): exact polynomial part plus phi functions of L h.
  tm.phi = transition_block_structure(prior, h).assemble();
  tm.expm_calls = 1;
  tm.precond = Vector::Ones(prior.state_dim());

  const int m = options.nodes > 0 ? options.nodes : q;
  const QuadratureRule rule = gauss_legendre(m, 0.0, h);
  std::vector<Matrix> pieces;
  pieces.reserve(m);
  for (int i = 0; i < m; ++i) {
    // exp(A s) B is the last block column of exp(A s): blocks s^(q-j) phi_(q-j)(L s)
    // and exp(L s).
    const double s = h - rule.nodes[i];
    const std::vector<Matrix> phis = phi_all(q, prior.rate * s);
    ++tm.expm_calls;
    Matrix col(prior.state_dim(), d);
    for (int j = 0; j < q; ++j) {
      col.middleRows(static_cast<Eigen::Index>(j) * d, d) = std::pow(s, q - j) * phis[q - j];
    }
    col.bottomRows(d) = phis[0];
    pieces.push_back(std::sqrt(rule.weights[i]) * col);
  }
  tm.q_sqrt = qr_fuse(pieces);
  return tm;
}

Matrix mfd_q(const GaussMarkovPrior& prior, double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("mfd_q: step size must be positive");
  }
  const Eigen::Index n = prior.state_dim();
  Matrix block = Matrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = prior.drift;
  block.topRightCorner(n, n) = prior.dispersion * prior.dispersion.transpose();
  block.bottomRightCorner(n, n) = -prior.drift.transpose();
  const Matrix e = expm(block * h);
  const Matrix phi = e.topLeftCorner(n, n);
  Matrix q = e.topRightCorner(n, n) * phi.transpose();
  return 0.5 * (q + q.transpose());
}

Matrix IoupTransitionBlocks::assemble() const {
  const Eigen::Index dq = iwp_block.rows();
  const Eigen::Index d = exp_lh.rows();
  Matrix out = Matrix::Zero(dq + d, dq + d);
  out.topLeftCorner(dq, dq) = iwp_block;
  out.topRightCorner(dq, d) = phi12;
  out.bottomRightCorner(d, d) = exp_lh;
  return out;
}

IoupTransitionBlocks transition_block_structure(const GaussMarkovPrior& prior, double h) {
  if (prior.kind != PriorKind::Ioup) {
    throw std::invalid_argument("transition_block_structure: requires an IOUP prior");
  }
  if (!(h > 0.0)) {
    throw std::invalid_argument("transition_block_structure: step size must be positive");
  }
  const int d = prior.d;
  const int q = prior.q;
  IoupTransitionBlocks blocks;

  // exp(A_IWP(d, q-1) h) has block (i, j) = h^(j-i)/(j-i)! I for j >= i.
  Matrix poly = Matrix::Zero(q, q);
  for (int i = 0; i < q; ++i) {
    for (int j = i; j < q; ++j) {
      poly(i, j) = std::pow(h, j - i) / factorial(j - i);
    }
  }
  blocks.iwp_block = kron_identity(poly, d);

  const std::vector<Matrix> phis = phi_all(q, prior.rate * h);
  blocks.exp_lh = phis[0];
  blocks.phi12 = Matrix(static_cast<Eigen::Index>(d) * q, d);
  for (int i = 0; i < q; ++i) {
    blocks.phi12.middleRows(static_cast<Eigen::Index>(i) * d, d) =
        std::pow(h, q - i) * phis[q - i];
  }
  return blocks;
}

}  // namespace probexp
