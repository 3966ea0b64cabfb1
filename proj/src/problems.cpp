#include "probexp/problems.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace probexp {

namespace {

std::string format_param(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

SemiLinearIVP logistic(double capacity) {
  if (!(capacity > 0.0)) {
    throw std::invalid_argument("logistic: carrying capacity must be positive");
  }
  SemiLinearIVP ivp;
  ivp.name = "logistic K=" + format_param(capacity);
  ivp.dim = 1;
  const double inv_k = 1.0 / capacity;
  set_vector_field(ivp, [inv_k](const auto& y, const auto& /*t*/, auto& out) {
    out[0] = -y[0] + y[0] * y[0] * inv_k;
  });
  ivp.linear = Matrix::Constant(1, 1, -1.0);
  ivp.nonlinear = [inv_k](const Vector& y, double) { return Vector(y.array().square() * inv_k); };
  ivp.jacobian = [inv_k](const Vector& y, double) {
    return Matrix::Constant(1, 1, -1.0 + 2.0 * y[0] * inv_k);
  };
  ivp.y0 = Vector::Constant(1, 1.0);
  ivp.t_end = 10.0;
  return ivp;
}

SemiLinearIVP linear_test(double lambda) {
  SemiLinearIVP ivp;
  ivp.name = "linear lambda=" + format_param(lambda);
  ivp.dim = 1;
  set_vector_field(ivp, [lambda](const auto& y, const auto& /*t*/, auto& out) { out[0] = y[0] * lambda; });
  ivp.linear = Matrix::Constant(1, 1, lambda);
  ivp.nonlinear = [](const Vector& y, double) { return Vector::Zero(y.size()).eval(); };
  ivp.jacobian = [lambda](const Vector&, double) { return Matrix::Constant(1, 1, lambda); };
  ivp.y0 = Vector::Constant(1, 1.0);
  ivp.t_end = 1.0;
  return ivp;
}

SemiLinearIVP burgers(int grid, double diffusion) {
  if (grid < 3) {
    throw std::invalid_argument("burgers: need at least 3 grid points");
  }
  if (!(diffusion > 0.0)) {
    throw std::invalid_argument("burgers: diffusion must be positive");
  }
  SemiLinearIVP ivp;
  ivp.name = "burgers N=" + std::to_string(grid) + " D=" + format_param(diffusion);
  const int d = grid;
  ivp.dim = d;
  const double dx = 1.0 / grid;
  const double diff = diffusion / (dx * dx);
  const double adv = 1.0 / (4.0 * dx);

  // F_1 = y_2^2, F_d = y_(d-1)^2, F_i = y_(i+1)^2 - y_(i-1)^2, all over 4 dx.
  auto advection = [d, adv](const auto& y, auto& out, auto add) {
    add(out[0], y[1] * y[1] * adv);
    add(out[d - 1], y[d - 2] * y[d - 2] * adv);
    for (int i = 1; i < d - 1; ++i) {
      add(out[i], (y[i + 1] * y[i + 1] - y[i - 1] * y[i - 1]) * adv);
    }
  };

  set_vector_field(ivp, [d, diff, advection](const auto& y, const auto& /*t*/, auto& out) {
    for (int i = 0; i < d; ++i) {
      auto lap = -2.0 * y[i];
      if (i > 0) lap += y[i - 1];
      if (i < d - 1) lap += y[i + 1];
      out[i] = diff * lap;
    }
    advection(y, out, [](auto& target, const auto& value) { target += value; });
  });

  Matrix lap = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    lap(i, i) = -2.0;
    if (i > 0) lap(i, i - 1) = 1.0;
    if (i < d - 1) lap(i, i + 1) = 1.0;
  }
  ivp.linear = diff * lap;
  ivp.nonlinear = [d, advection](const Vector& y, double) {
    Vector out = Vector::Zero(d);
    advection(y, out, [](double& target, double value) { target += value; });
    return out;
  };
  ivp.jacobian = [d, adv, lin = *ivp.linear](const Vector& y, double) {
    Matrix j = lin;
    j(0, 1) += 2.0 * y[1] * adv;
    j(d - 1, d - 2) += 2.0 * y[d - 2] * adv;
    for (int i = 1; i < d - 1; ++i) {
      j(i, i + 1) += 2.0 * y[i + 1] * adv;
      j(i, i - 1) -= 2.0 * y[i - 1] * adv;
    }
    return j;
  };

  ivp.y0 = Vector(d);
  for (int i = 0; i < d; ++i) {
    const double x = (i + 1) * dx;
    ivp.y0[i] = std::pow(std::sin(3.0 * std::numbers::pi * x), 3) * std::pow(1.0 - x, 1.5);
  }
  ivp.t_end = 1.0;
  return ivp;
}

SemiLinearIVP reaction_diffusion(int grid, double diffusion) {
  if (grid < 3) {
    throw std::invalid_argument("reaction_diffusion: need at least 3 grid points");
  }
  if (!(diffusion > 0.0)) {
    throw std::invalid_argument("reaction_diffusion: diffusion must be positive");
  }
  SemiLinearIVP ivp;
  ivp.name = "reaction-diffusion N=" + std::to_string(grid) + " D=" + format_param(diffusion);
  const int d = grid;
  ivp.dim = d;
  const double dx = 1.0 / grid;
  const double diff = diffusion / (dx * dx);

  set_vector_field(ivp, [d, diff](const auto& y, const auto& /*t*/, auto& out) {
    for (int i = 0; i < d; ++i) {
      // Neumann: -1 on the corners of the Laplacian.
      auto lap = ((i == 0 || i == d - 1) ? -1.0 : -2.0) * y[i];
      if (i > 0) lap += y[i - 1];
      if (i < d - 1) lap += y[i + 1];
      out[i] = diff * lap + y[i] * (1.0 - y[i]);
    }
  });

  Matrix lap = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    lap(i, i) = (i == 0 || i == d - 1) ? -1.0 : -2.0;
    if (i > 0) lap(i, i - 1) = 1.0;
    if (i < d - 1) lap(i, i + 1) = 1.0;
  }
  ivp.linear = diff * lap;
  ivp.nonlinear = [](const Vector& y, double) { return Vector(y.array() * (1.0 - y.array())); };
  ivp.jacobian = [lin = *ivp.linear](const Vector& y, double) {
    Matrix j = lin;
    j.diagonal().array() += 1.0 - 2.0 * y.array();
    return j;
  };

  ivp.y0 = Vector(d);
  for (int i = 0; i < d; ++i) {
    const double x = (i + 0.5) * dx;
    ivp.y0[i] = 1.0 / (1.0 + std::exp(30.0 * x - 10.0));
  }
  ivp.t_end = 2.0;
  return ivp;
}

std::vector<std::string> problem_names() {
  return {"logistic", "linear", "burgers", "reaction-diffusion"};
}

namespace {

double take(ProblemParams& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  if (it == params.end()) {
    return fallback;
  }
  const double v = it->second;
  params.erase(it);
  return v;
}

int take_int(ProblemParams& params, const std::string& key, int fallback) {
  const double v = take(params, key, fallback);
  if (v != std::floor(v)) {
    throw std::invalid_argument("parameter '" + key + "' must be an integer");
  }
  return static_cast<int>(v);
}

}  // namespace

SemiLinearIVP make_problem(const std::string& name, const ProblemParams& params, bool paper_scale) {
  ProblemParams rest = params;
  SemiLinearIVP ivp;
  if (name == "logistic") {
    ivp = logistic(take(rest, "K", 1000.0));
  } else if (name == "linear") {
    ivp = linear_test(take(rest, "lambda", -1.0));
  } else if (name == "burgers") {
    ivp = burgers(take_int(rest, "N", paper_scale ? 250 : 50), take(rest, "D", 0.075));
  } else if (name == "reaction-diffusion") {
    ivp = reaction_diffusion(take_int(rest, "N", paper_scale ? 100 : 25), take(rest, "D", 0.25));
  } else {
    throw std::invalid_argument("unknown problem '" + name + "'");
  }
  if (const auto t = rest.find("T"); t != rest.end()) {
    if (!(t->second > ivp.t0)) {
      throw std::invalid_argument("parameter 'T' must exceed the initial time");
    }
    ivp.t_end = t->second;
    rest.erase(t);
  }
  if (!rest.empty()) {
    throw std::invalid_argument("unknown parameter '" + rest.begin()->first + "' for problem " + name);
  }
  return ivp;
}

Matrix finite_difference_jacobian(const VectorFieldFn& f, const Vector& y, double t) {
  const Eigen::Index d = y.size();
  Matrix j(d, d);
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  Vector probe = y;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double step = base * (1.0 + std::abs(y[k]));
    probe[k] = y[k] + step;
    const Vector fp = f(probe, t);
    probe[k] = y[k] - step;
    const Vector fm = f(probe, t);
    probe[k] = y[k];
    j.col(k) = (fp - fm) / (2.0 * step);
  }
  return j;
}

}  // namespace probexp
