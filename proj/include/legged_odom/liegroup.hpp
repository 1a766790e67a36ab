#pragma once

#include <Eigen/Core>

namespace legged {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Skew-symmetric matrix such that hat(a) * b = a x b.
Matrix3 hat(const Vector3& v);
Vector3 vee(const Matrix3& m);

namespace so3 {

/// Below this angle the integration kernels switch to their two-term series.
inline constexpr double kSmallAngle = 1e-4;

/**
 * Scalar coefficients shared by Rodrigues' formula and its integrals, for
 * alpha = |theta|:
 *   A = sin(a)/a, B = (1-cos(a))/a^2, C = (a-sin(a))/a^3, E = (a^2-2+2cos(a))/(2a^4).
 */
struct Coefficients {
  double A;
  double B;
  double C;
  double E;
};

Coefficients coefficients(double alpha);

/// Rodrigues: I + A*W + B*W^2 with W = hat(theta).
Matrix3 exp(const Vector3& theta);

/// Rotation vector of R; returns an angle in [0, pi].
Vector3 log(const Matrix3& R);

/// J_l(theta) = I + B*W + C*W^2, so that exp(theta) = I + W*J_l(theta).
Matrix3 left_jacobian(const Vector3& theta);
Matrix3 left_jacobian_inverse(const Vector3& theta);

/// J_r(theta) = J_l(-theta).
Matrix3 right_jacobian(const Vector3& theta);
Matrix3 right_jacobian_inverse(const Vector3& theta);

/// Gamma_l(theta) = I/2 + C*W + E*W^2, the double integral of exp over the unit step.
Matrix3 gamma_left(const Vector3& theta);

/// Largest absolute entry of R^T R - I.
double orthogonality_defect(const Matrix3& R);

/// Nearest rotation in Frobenius norm (SVD projection).
Matrix3 project_to_rotation(const Matrix3& R);

/// Re-orthonormalizes only when the defect exceeds 1e-9.
Matrix3 renormalize(const Matrix3& R);

}  // namespace so3

/**
 * Element of SE_K(3): one rotation and K vector columns, embedded as
 *   [ R  x_1 ... x_K ]
 *   [ 0      I_K     ].
 * Tangent vectors are ordered [phi, u_1, ..., u_K] (dimension 3(K+1)) and
 * perturbations are applied on the right: X = Xhat * Exp(xi).
 */
class SEK3 {
 public:
  SEK3() : SEK3(0) {}
  explicit SEK3(int num_columns);
  SEK3(const Matrix3& rotation, const Eigen::Matrix3Xd& columns);

  static SEK3 identity(int num_columns) { return SEK3(num_columns); }

  int num_columns() const { return static_cast<int>(columns_.cols()); }
  int dim() const { return 3 * (num_columns() + 1); }

  const Matrix3& rotation() const { return rotation_; }
  const Eigen::Matrix3Xd& columns() const { return columns_; }
  Vector3 column(int i) const { return columns_.col(i); }

  void set_rotation(const Matrix3& R) { rotation_ = R; }
  void set_column(int i, const Vector3& x);

  /// (R_a R_b, x_i + R_a y_i).
  SEK3 compose(const SEK3& other) const;
  SEK3 operator*(const SEK3& other) const { return compose(other); }
  SEK3 inverse() const;

  static SEK3 exp(const Eigen::Ref<const Vector>& xi);
  /// Throws DomainError when the rotation angle is within 1e-6 of pi.
  Vector log() const;

  /// Block form: rotation block R; column i row blocks [hat(x_i) R, ..., R].
  Matrix adjoint() const;

  /// (3+K)x(3+K) homogeneous embedding.
  Matrix matrix() const;

  SEK3 retract(const Eigen::Ref<const Vector>& xi) const { return compose(exp(xi)); }
  /// Log(this^-1 * other).
  Vector local(const SEK3& other) const { return inverse().compose(other).log(); }

  bool is_approx(const SEK3& other, double tol) const;

 private:
  Matrix3 rotation_;
  Eigen::Matrix3Xd columns_;
};

/// Left Jacobian of SE_K(3): Exp(xi + d) ~ Exp(J_l(xi) d) Exp(xi).
Matrix sek3_left_jacobian(const Eigen::Ref<const Vector>& xi);
Matrix sek3_left_jacobian_inverse(const Eigen::Ref<const Vector>& xi);
/// Right Jacobian: Exp(xi + d) ~ Exp(xi) Exp(J_r(xi) d).
Matrix sek3_right_jacobian(const Eigen::Ref<const Vector>& xi);
Matrix sek3_right_jacobian_inverse(const Eigen::Ref<const Vector>& xi);

}  // namespace legged
