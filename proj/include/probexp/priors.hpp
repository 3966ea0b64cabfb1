#pragma once

#include "probexp/matfun.hpp"

namespace probexp {

enum class PriorKind { Iwp, Ioup };

/// Gauss-Markov prior dY = A Y dt + kappa B dW over the stacked state
/// Y = [y, y', ..., y^(q)], each block of size d.
struct GaussMarkovPrior {
  PriorKind kind = PriorKind::Iwp;
  int d = 1;
  int q = 1;
  Matrix drift;       // A, d(q+1) x d(q+1)
  Matrix dispersion;  // B, d(q+1) x d
  Matrix rate;        // L for IOUP, empty for IWP

  [[nodiscard]] Eigen::Index state_dim() const { return static_cast<Eigen::Index>(d) * (q + 1); }
};

/// E_i, the d x d(q+1) matrix extracting derivative block i.
[[nodiscard]] Matrix selection(int d, int q, int i);

[[nodiscard]] GaussMarkovPrior make_iwp(int d, int q);
[[nodiscard]] GaussMarkovPrior make_ioup(int d, int q, const Matrix& rate);

struct DiscretizeOptions {
  /// Quadrature nodes for the IOUP process-noise square root; 0 means m = q.
  int nodes = 0;
};

/// Discrete transition Y(t+h) | Y(t) ~ N(Phi Y(t), kappa^2 Q_sqrt Q_sqrt^T).
///
/// `precond` holds the diagonal of the step-size coordinate change T(h).
/// For IWP it is sqrt(h) h^(q-i)/(q-i)! per block; for IOUP it is all ones.
struct TransitionModel {
  double h = 0.0;
  Matrix phi;
  Matrix q_sqrt;
  Vector precond;
  int expm_calls = 0;
};

[[nodiscard]] TransitionModel discretize(const GaussMarkovPrior& prior, double h,
                                         const DiscretizeOptions& options = {});

/// Closed-form IWP process noise Q(h).
[[nodiscard]] Matrix iwp_process_noise(int d, int q, double h);

/// Full Q(h) via the Van Loan block exponential of [[A, BB^T], [0, -A^T]] h.
[[nodiscard]] Matrix mfd_q(const GaussMarkovPrior& prior, double h);

/// Block decomposition of the IOUP transition matrix:
///   Phi(h) = [[exp(A_IWP(d, q-1) h), Phi12], [0, exp(L h)]]
/// with block i of Phi12 equal to h^(q-i) phi_(q-i)(L h).
struct IoupTransitionBlocks {
  Matrix iwp_block;  // dq x dq
  Matrix phi12;      // dq x d
  Matrix exp_lh;     // d x d

  [[nodiscard]] Matrix assemble() const;
};

[[nodiscard]] IoupTransitionBlocks transition_block_structure(const GaussMarkovPrior& prior,
                                                              double h);

}  // namespace probexp
