#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "probexp/priors.hpp"

using namespace probexp;

namespace {

Matrix gram(const Matrix& f) { return f * f.transpose(); }

// Q(h) = int_0^h e^{A s} B B^T e^{A^T s} ds by composite Simpson, as an
// independent check on the Van Loan construction.
Matrix simpson_q(const GaussMarkovPrior& p, double h, int panels = 400) {
  const Eigen::Index n = p.state_dim();
  Matrix sum = Matrix::Zero(n, n);
  const double dt = h / (2 * panels);
  for (int i = 0; i <= 2 * panels; ++i) {
    const double w = (i == 0 || i == 2 * panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const Matrix e = oracle::taylor_expm(p.drift * (i * dt)) * p.dispersion;
    sum += w * e * e.transpose();
  }
  return sum * dt / 3.0;
}

}  // namespace

TEST_CASE("selection matrices pick derivative blocks") {
  const Matrix e1 = selection(2, 3, 1);
  CHECK(e1.rows() == 2);
  CHECK(e1.cols() == 8);
  Vector y = Vector::LinSpaced(8, 0.0, 7.0);
  CHECK((e1 * y - Vector::LinSpaced(2, 2.0, 3.0)).norm() == 0.0);
}

TEST_CASE("IWP transition is a Taylor polynomial propagator") {
  // q = 2, d = 1, h = 1: Phi = [[1,1,1/2],[0,1,1],[0,0,1]]
  const auto tm = discretize(make_iwp(1, 2), 1.0);
  Matrix expected(3, 3);
  expected << 1, 1, 0.5, 0, 1, 1, 0, 0, 1;
  CHECK((tm.phi - expected).norm() < 1e-15);
  CHECK(tm.expm_calls == 0);

  std::mt19937_64 rng(1);
  for (int q = 1; q <= 4; ++q) {
    const auto p = make_iwp(2, q);
    for (double h : {0.01, 0.3, 2.0}) {
      const auto t = discretize(p, h);
      CHECK(oracle::rel_fro(t.phi, oracle::taylor_expm(p.drift * h)) < 1e-13);
    }
  }
}

TEST_CASE("IWP process noise matches the closed form and a quadrature oracle") {
  // q = 1, h = 1: Q = [[1/3, 1/2], [1/2, 1]]
  Matrix q1(2, 2);
  q1 << 1.0 / 3, 0.5, 0.5, 1.0;
  CHECK((iwp_process_noise(1, 1, 1.0) - q1).norm() < 1e-15);
  CHECK((gram(discretize(make_iwp(1, 1), 1.0).q_sqrt) - q1).norm() < 1e-14);

  for (int q = 1; q <= 3; ++q) {
    for (double h : {0.05, 0.5, 1.5}) {
      const auto p = make_iwp(2, q);
      const Matrix closed = iwp_process_noise(2, q, h);
      CHECK(oracle::rel_fro(gram(discretize(p, h).q_sqrt), closed) < 1e-12);
      CHECK(oracle::rel_fro(mfd_q(p, h), closed) < 1e-10);
      CHECK(oracle::rel_fro(simpson_q(p, h), closed) < 1e-9);
    }
  }
}

TEST_CASE("transition semigroup Phi(s) Phi(t) = Phi(s + t)") {
  std::mt19937_64 rng(2);
  const Matrix l = oracle::random_with_radius(rng, 2, 2.0);
  for (const auto& p : {make_iwp(2, 2), make_ioup(2, 2, l)}) {
    const auto a = discretize(p, 0.3);
    const auto b = discretize(p, 0.45);
    const auto c = discretize(p, 0.75);
    CHECK(oracle::rel_fro(a.phi * b.phi, c.phi) < 1e-12);
    // Q(s + t) = Phi(t) Q(s) Phi(t)^T + Q(t)
    const Matrix composed = b.phi * mfd_q(p, 0.3) * b.phi.transpose() + mfd_q(p, 0.45);
    CHECK(oracle::rel_fro(composed, mfd_q(p, 0.75)) < 1e-10);
  }
}

TEST_CASE("process noise grows with the step") {
  const auto p = make_ioup(1, 2, -3.0 * Matrix::Identity(1, 1));
  Matrix prev = mfd_q(p, 0.1);
  for (double h : {0.2, 0.4, 0.8, 1.6}) {
    const Matrix next = mfd_q(p, h);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(next - prev);
    CHECK(es.eigenvalues().minCoeff() > -1e-13);
    prev = next;
  }
}

TEST_CASE("IOUP with L = 0 reduces to IWP") {
  for (int q = 1; q <= 3; ++q) {
    const auto iwp = discretize(make_iwp(2, q), 0.7);
    const auto ioup = discretize(make_ioup(2, q, Matrix::Zero(2, 2)), 0.7, {.nodes = 12});
    CHECK(oracle::rel_fro(ioup.phi, iwp.phi) < 1e-13);
    CHECK(oracle::rel_fro(gram(ioup.q_sqrt), gram(iwp.q_sqrt)) < 1e-12);
  }
  // and continuously as L -> 0
  const Matrix eps = 1e-7 * Matrix::Identity(1, 1);
  const auto near = discretize(make_ioup(1, 2, eps), 0.5, {.nodes = 12});
  CHECK(oracle::rel_fro(near.phi, discretize(make_iwp(1, 2), 0.5).phi) < 1e-6);
}

TEST_CASE("IOUP drift and dispersion layout") {
  Matrix l(2, 2);
  l << -1, 0.5, 0.2, -2;
  const auto p = make_ioup(2, 2, l);
  CHECK(p.drift.rows() == 6);
  CHECK((p.drift.block(4, 4, 2, 2) - l).norm() == 0.0);
  CHECK((p.drift.block(0, 2, 2, 2) - Matrix::Identity(2, 2)).norm() == 0.0);
  CHECK((p.dispersion.bottomRows(2) - Matrix::Identity(2, 2)).norm() == 0.0);
  CHECK_THROWS_AS((void)make_ioup(3, 2, l), std::invalid_argument);
  CHECK_THROWS_AS((void)make_iwp(0, 1), std::invalid_argument);
}

TEST_CASE("block structure of the IOUP transition") {
  std::mt19937_64 rng(4);
  for (int q = 1; q <= 3; ++q) {
    for (int d = 1; d <= 4; ++d) {
      const Matrix l = oracle::random_with_radius(rng, d, 4.0);
      const auto p = make_ioup(d, q, l);
      for (double h : {0.1, 0.5, 1.0}) {
        const auto blocks = transition_block_structure(p, h);
        CHECK(oracle::rel_fro(blocks.assemble(), oracle::taylor_expm(p.drift * h)) < 1e-10);
        CHECK(oracle::rel_fro(blocks.exp_lh, oracle::taylor_expm(l * h)) < 1e-12);
      }
    }
  }
  CHECK_THROWS_AS((void)transition_block_structure(make_iwp(1, 2), 1.0), std::invalid_argument);
}

TEST_CASE("quadrature square root converges to the exact process noise") {
  std::mt19937_64 rng(6);
  for (int q = 1; q <= 3; ++q) {
    const Matrix l = oracle::random_with_radius(rng, 2, 1.5);
    const auto p = make_ioup(2, q, l);
    const double h = 1.0;
    const Matrix exact = mfd_q(p, h);
    double prev = 1.0;
    for (int m = q; m <= 32; m *= 2) {
      const double err = oracle::rel_fro(gram(discretize(p, h, {.nodes = m}).q_sqrt), exact);
      CHECK((err <= prev || err < 1e-13));
      prev = err;
    }
    CHECK(oracle::rel_fro(gram(discretize(p, h, {.nodes = 20}).q_sqrt), exact) < 1e-8);
  }
}

TEST_CASE("H Q H^T = h I for the once-integrated OU prior, at any node count") {
  // H e^{As} B = I for every s, so only the sum of the weights matters.
  std::mt19937_64 rng(8);
  for (int d = 1; d <= 3; ++d) {
    const Matrix l = oracle::random_with_radius(rng, d, 3.0);
    for (double h : {0.1, 0.7}) {
      for (int m : {1, 3, 10}) {
        const auto tm = discretize(make_ioup(d, 1, l), h, {.nodes = m});
        const Matrix hh = selection(d, 1, 1) - l * selection(d, 1, 0);
        const Matrix hqh = hh * gram(tm.q_sqrt) * hh.transpose();
        CHECK((hqh - h * Matrix::Identity(d, d)).norm() < 1e-10);
      }
    }
  }
}
