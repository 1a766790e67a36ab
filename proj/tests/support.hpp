#pragma once

// Random generators and numeric differentiation shared by the unit suites.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include "legged_odom/factor.hpp"
#include "legged_odom/liegroup.hpp"
#include "legged_odom/values.hpp"

namespace legged::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double sigma = 1.0) { return std::normal_distribution<double>(0.0, sigma)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Vector vector(int n, double scale = 1.0) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(-scale, scale);
    return v;
  }
  Vector3 vec3(double scale = 1.0) { return vector(3, scale); }
  /// Direction uniform on the sphere, length exactly `norm`.
  Vector3 vec3_with_norm(double norm) {
    Vector3 v(normal(), normal(), normal());
    return norm * v.normalized();
  }
  Matrix3 rotation() { return so3::exp(vec3_with_norm(uniform(0.0, 3.0))); }
  SEK3 sek3(int K, double scale = 2.0) {
    return SEK3(rotation(), Eigen::Matrix3Xd(vector(3 * K, scale).reshaped(3, K)));
  }
  Matrix spd(int n) {
    const Matrix A = Matrix(vector(n * n).reshaped(n, n));
    return A * A.transpose() + 0.1 * Matrix::Identity(n, n);
  }

 private:
  std::mt19937_64 rng_;
};

/// Central difference of f(retract(x, d)) against d, with residuals compared by plain subtraction.
inline Matrix numeric_jacobian(const std::function<Vector(const Vector&)>& f, int dim,
                               double h = 1e-6) {
  const Vector f0 = f(Vector::Zero(dim));
  Matrix J(f0.size(), dim);
  for (int i = 0; i < dim; ++i) {
    Vector d = Vector::Zero(dim);
    d(i) = h;
    J.col(i) = (f(d) - f(-d)) / (2.0 * h);
  }
  return J;
}

/// Analytic vs numeric Jacobian of every key of a factor; returns the max abs difference.
inline double factor_jacobian_error(const Factor& factor, const Values& values, double h = 1e-6) {
  std::vector<Matrix> H;
  factor.evaluate(values, &H);
  double worst = 0.0;
  for (std::size_t k = 0; k < factor.keys().size(); ++k) {
    const Key key = factor.keys()[k];
    const Variable base = values.at(key);
    const Matrix num = numeric_jacobian(
        [&](const Vector& d) {
          Values v = values;
          v.update(key, retract(base, d));
          return factor.evaluate(v, nullptr);
        },
        variable_dim(base), h);
    worst = std::max(worst, (num - H[k]).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace legged::testing
