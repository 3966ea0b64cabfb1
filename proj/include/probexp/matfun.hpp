#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace probexp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Nodes and weights of a quadrature rule on [a, b].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Matrix exponential (scaling and squaring with a Pade approximant).
/// Throws std::invalid_argument for non-square or non-finite input.
[[nodiscard]] Matrix expm(const Matrix& m);

/// phi_k(Z) = int_0^1 exp(Z(1-t)) t^(k-1)/(k-1)! dt, with phi_0 = exp.
[[nodiscard]] Matrix phi(int k, const Matrix& z);

/// phi_0(Z), ..., phi_k(Z) from a single exponential of the block
/// companion matrix [[Z, I, 0..], [0, 0, I, ..], ..., [0 .. 0]].
[[nodiscard]] std::vector<Matrix> phi_all(int k, const Matrix& z);

/// m-node Gauss-Legendre rule on [a, b], nodes strictly increasing.
[[nodiscard]] QuadratureRule gauss_legendre(int m, double a, double b);

/// Returns F with F F^T = sum_i F_i F_i^T, via QR of the stacked transposes.
/// The result has the common row count and at most that many columns.
[[nodiscard]] Matrix qr_fuse(std::span<const Matrix> factors);
[[nodiscard]] Matrix qr_fuse(std::initializer_list<Matrix> factors);

[[nodiscard]] bool all_finite(const Matrix& m);

}  // namespace probexp
