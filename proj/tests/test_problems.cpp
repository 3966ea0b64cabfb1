#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "probexp/bench.hpp"
#include "probexp/problems.hpp"

using namespace probexp;

namespace {

std::vector<SemiLinearIVP> registered() {
  std::vector<SemiLinearIVP> out;
  for (const auto& name : problem_names()) out.push_back(make_problem(name));
  out.push_back(logistic(10.0));
  out.push_back(burgers(7, 0.3));
  out.push_back(reaction_diffusion(6, 0.1));
  return out;
}

}  // namespace

TEST_CASE("split and Jacobian consistency at random probe points") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (const auto& ivp : registered()) {
    CAPTURE(ivp.name);
    REQUIRE(ivp.has_split());
    REQUIRE(ivp.y0.size() == ivp.dim);
    for (int probe = 0; probe < 100; ++probe) {
      Vector y(ivp.dim);
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = u(rng);
      const double t = 0.1 * probe;
      const Vector f = ivp.f(y, t);
      const Vector split = *ivp.linear * y + ivp.nonlinear(y, t);
      CHECK((f - split).norm() <= 1e-12 * (1.0 + f.norm()));
      const Matrix j = ivp.jacobian(y, t);
      const Matrix fd = finite_difference_jacobian(ivp.f, y, t);
      CHECK((j - fd).norm() <= 1e-6 * (1.0 + j.norm()));
    }
  }
}

TEST_CASE("jet evaluation agrees with the double evaluation") {
  for (const auto& ivp : registered()) {
    CAPTURE(ivp.name);
    REQUIRE(ivp.f_jet);
    std::vector<Jet> y;
    for (Eigen::Index i = 0; i < ivp.y0.size(); ++i) y.push_back(Jet(3, ivp.y0[i]));
    const auto out = ivp.f_jet(y, Jet::variable(3, ivp.t0));
    const Vector f = ivp.f(ivp.y0, ivp.t0);
    for (Eigen::Index i = 0; i < f.size(); ++i) CHECK(out[i][0] == doctest::Approx(f[i]).epsilon(1e-14));
  }
}

TEST_CASE("logistic and linear test problems") {
  const auto lg = logistic(100.0);
  CHECK(lg.dim == 1);
  CHECK(lg.y0[0] == 1.0);
  CHECK(lg.t_end == 10.0);
  CHECK((*lg.linear)(0, 0) == -1.0);
  // y = K is the non-trivial equilibrium
  CHECK(lg.f(Vector::Constant(1, 100.0), 0.0)[0] == doctest::Approx(0.0));
  CHECK_THROWS_AS((void)logistic(0.0), std::invalid_argument);

  const auto lin = linear_test(-3.0);
  CHECK(lin.nonlinear(Vector::Constant(1, 5.0), 0.0)[0] == 0.0);
  CHECK(lin.jacobian(Vector::Constant(1, 5.0), 0.0)(0, 0) == -3.0);
}

TEST_CASE("burgers discretization") {
  const int n = 10;
  const auto b = burgers(n, 0.075);
  const double dx = 1.0 / n;
  const Matrix& l = *b.linear;
  CHECK(l(4, 4) == doctest::Approx(-2.0 * 0.075 / (dx * dx)));
  CHECK(l(4, 3) == doctest::Approx(0.075 / (dx * dx)));
  CHECK(l(4, 5) == doctest::Approx(0.075 / (dx * dx)));
  CHECK(l(4, 6) == 0.0);
  CHECK(l(0, 0) == doctest::Approx(-2.0 * 0.075 / (dx * dx)));

  // constant state: interior advection cancels, the two boundary terms remain
  const Vector ones = Vector::Ones(n);
  const Vector nl = b.nonlinear(ones, 0.0);
  for (int i = 1; i < n - 1; ++i) CHECK(nl[i] == 0.0);
  CHECK(nl[0] == doctest::Approx(1.0 / (4.0 * dx)));
  CHECK(nl[n - 1] == doctest::Approx(1.0 / (4.0 * dx)));

  // last state sits at x = 1 where the initial profile vanishes
  CHECK(std::abs(b.y0[n - 1]) < 1e-15);
  const double x = 0.3;
  CHECK(b.y0[2] == doctest::Approx(std::pow(std::sin(3 * M_PI * x), 3) * std::pow(1 - x, 1.5)));
  CHECK(b.t_end == 1.0);
  CHECK_THROWS_AS((void)burgers(2, 0.1), std::invalid_argument);
  CHECK_THROWS_AS((void)burgers(10, 0.0), std::invalid_argument);
}

TEST_CASE("reaction-diffusion discretization") {
  const int n = 8;
  const auto r = reaction_diffusion(n, 0.25);
  const double dx = 1.0 / n;
  const Matrix& l = *r.linear;
  CHECK(l(0, 0) == doctest::Approx(-0.25 / (dx * dx)));
  CHECK(l(n - 1, n - 1) == doctest::Approx(-0.25 / (dx * dx)));
  CHECK(l(3, 3) == doctest::Approx(-0.5 / (dx * dx)));
  // Neumann rows sum to zero
  CHECK(l.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.nonlinear(Vector::Ones(n), 0.0).norm() == 0.0);
  CHECK(r.f(Vector::Zero(n), 0.0).norm() == 0.0);
  CHECK(r.t_end == 2.0);
  CHECK(r.y0[0] == doctest::Approx(1.0 / (1.0 + std::exp(30.0 * 0.5 * dx - 10.0))));
}

TEST_CASE("problems by name") {
  CHECK(make_problem("burgers").dim == 50);
  CHECK(make_problem("burgers", {}, true).dim == 250);
  CHECK(make_problem("reaction-diffusion").dim == 25);
  CHECK(make_problem("reaction-diffusion", {}, true).dim == 100);
  const auto lg = make_problem("logistic", {{"K", 10.0}, {"T", 3.0}});
  CHECK(lg.f(Vector::Constant(1, 10.0), 0.0)[0] == doctest::Approx(0.0));
  CHECK(lg.t_end == 3.0);
  CHECK_THROWS_AS((void)make_problem("nope"), std::invalid_argument);
  CHECK_THROWS_AS((void)make_problem("logistic", {{"lambda", 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS((void)make_problem("burgers", {{"N", 10.5}}), std::invalid_argument);
}

TEST_CASE("reaction-diffusion reference stays in the unit interval") {
  const auto r = reaction_diffusion(25, 0.25);
  const auto ref = reference(r, 1e-8);
  CHECK(ref.states.minCoeff() >= -1e-6);
  CHECK(ref.states.maxCoeff() <= 1.0 + 1e-6);
}

TEST_CASE("burgers reference norm decays after the initial transient") {
  const auto b = burgers(50, 0.075);
  const auto ref = reference(b, 1e-6);
  const Eigen::Index cols = ref.states.cols();
  std::vector<double> norms(cols);
  for (Eigen::Index k = 0; k < cols; ++k) norms[k] = ref.states.col(k).norm();
  // transient: the first 10% of the time span
  const Eigen::Index start = cols / 10;
  Eigen::Index violations = 0;
  for (Eigen::Index k = start + 1; k < cols; ++k) violations += norms[k] > norms[k - 1] * 1.01;
  CHECK(violations == 0);
  CHECK(norms.back() < norms[start]);
}
