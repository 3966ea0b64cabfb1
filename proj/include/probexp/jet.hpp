#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace probexp {

/// Truncated Taylor polynomial c_0 + c_1 s + ... + c_k s^k.
///
/// Arithmetic truncates at the smaller order of the two operands, which is
/// what Taylor-mode propagation needs: a vector field evaluated on an
/// order-k jet of y(t) yields the order-k jet of f(y(t), t).
class Jet {
 public:
  Jet() = default;
  explicit Jet(std::size_t order, double value = 0.0) : c_(order + 1, 0.0) { c_[0] = value; }
  explicit Jet(std::vector<double> coefficients) : c_(std::move(coefficients)) {}

  [[nodiscard]] static Jet variable(std::size_t order, double value) {
    Jet j(order, value);
    if (order >= 1) {
      j.c_[1] = 1.0;
    }
    return j;
  }

  [[nodiscard]] std::size_t order() const { return c_.empty() ? 0 : c_.size() - 1; }
  [[nodiscard]] double operator[](std::size_t i) const { return c_[i]; }
  [[nodiscard]] double& operator[](std::size_t i) { return c_[i]; }
  [[nodiscard]] const std::vector<double>& coefficients() const { return c_; }

  Jet& operator+=(const Jet& o) {
    truncate_to(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    truncate_to(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Jet& operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
  }
  Jet& operator/=(double s) {
    for (double& v : c_) v /= s;
    return *this;
  }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    const std::size_t n = std::min(a.c_.size(), b.c_.size());
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i <= k; ++i) s += a.c_[i] * b.c_[k - i];
      out[k] = s;
    }
    return Jet(std::move(out));
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { return a *= -1.0; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, Jet a) { return (a *= -1.0) += s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }

 private:
  void truncate_to(const Jet& o) {
    if (o.c_.size() < c_.size()) c_.resize(o.c_.size());
  }

  std::vector<double> c_{0.0};
};

}  // namespace probexp
