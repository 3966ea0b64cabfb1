#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "probexp/jet.hpp"
#include "probexp/matfun.hpp"

namespace probexp {

using VectorFieldFn = std::function<Vector(const Vector&, double)>;
using JetFieldFn = std::function<std::vector<Jet>(const std::vector<Jet>&, const Jet&)>;
using JacobianFn = std::function<Matrix(const Vector&, double)>;

/// Initial value problem y' = f(y, t), y(t0) = y0 on [t0, t_end], optionally
/// with a semi-linear split f(y, t) = L y + N(y, t).
struct SemiLinearIVP {
  std::string name;
  int dim = 0;
  VectorFieldFn f;
  JetFieldFn f_jet;                // empty if f cannot be evaluated over jets
  std::optional<Matrix> linear;    // L
  VectorFieldFn nonlinear;         // N, set whenever `linear` is
  JacobianFn jacobian;             // empty if no analytic Jacobian
  Vector y0;
  double t0 = 0.0;
  double t_end = 1.0;

  [[nodiscard]] bool has_split() const { return linear.has_value() && static_cast<bool>(nonlinear); }
};

/// Installs both the double and the jet evaluation of one generic field
/// `field(y, t, out)` where y/out support operator[] over the scalar type.
template <class Field>
void set_vector_field(SemiLinearIVP& ivp, Field field) {
  const int d = ivp.dim;
  ivp.f = [field, d](const Vector& y, double t) {
    Vector out(d);
    field(y, t, out);
    return out;
  };
  ivp.f_jet = [field, d](const std::vector<Jet>& y, const Jet& t) {
    std::vector<Jet> out(d, Jet(t.order()));
    field(y, t, out);
    return out;
  };
}

/// y' = -y + y^2/K, y(0) = 1, t in [0, 10].
[[nodiscard]] SemiLinearIVP logistic(double capacity);

/// y' = lambda y, y(0) = 1, t in [0, 1].
[[nodiscard]] SemiLinearIVP linear_test(double lambda);

/// Method-of-lines Burgers equation with zero-Dirichlet boundaries.
[[nodiscard]] SemiLinearIVP burgers(int grid, double diffusion);

/// Method-of-lines reaction-diffusion with logistic reaction and zero-Neumann boundaries.
[[nodiscard]] SemiLinearIVP reaction_diffusion(int grid, double diffusion);

using ProblemParams = std::map<std::string, double>;

/// Names accepted by make_problem.
[[nodiscard]] std::vector<std::string> problem_names();

/// Builds a registered problem by name. Unknown keys are rejected.
[[nodiscard]] SemiLinearIVP make_problem(const std::string& name, const ProblemParams& params = {},
                                         bool paper_scale = false);

/// Central finite-difference Jacobian of f at (y, t).
[[nodiscard]] Matrix finite_difference_jacobian(const VectorFieldFn& f, const Vector& y, double t);

}  // namespace probexp
