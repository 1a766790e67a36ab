#include "legged_odom/liegroup.hpp"

#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "legged_odom/errors.hpp"

namespace legged {

namespace {

// Sum_{m>=0} (-1)^m c(m) x^m for the alternating even-power series of the
// kernels; terms fall off factorially so 20 terms is far beyond convergence.
template <typename Coefficient>
double alternating_series(double alpha2, Coefficient coeff) {
  double sum = 0.0;
  double power = 1.0;
  for (int m = 0; m < 20; ++m) {
    const double term = coeff(m) * power;
    sum += (m % 2 == 0) ? term : -term;
    if (std::abs(term) < 1e-20) break;
    power *= alpha2;
  }
  return sum;
}

double inverse_factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return 1.0 / f;
}

// Coefficient of the hat(phi)^2 term in J_l^{-1}: 1/a^2 - (1+cos a)/(2 a sin a).
double left_jacobian_inverse_coeff(double alpha) {
  if (alpha < so3::kSmallAngle) return 1.0 / 12.0 + alpha * alpha / 720.0;
  if (alpha < 0.1) {
    const double a2 = alpha * alpha;
    return 1.0 / 12.0 + a2 / 720.0 + a2 * a2 / 30240.0 + a2 * a2 * a2 / 1209600.0 +
           a2 * a2 * a2 * a2 / 47900160.0;
  }
  return 1.0 / (alpha * alpha) - 1.0 / (2.0 * alpha * std::tan(0.5 * alpha));
}

// (2a - 3 sin a + a cos a) / (2 a^5), third coefficient of the SE(3) Q block.
double q3_coeff(double alpha) {
  if (alpha < so3::kSmallAngle) return 1.0 / 120.0 - alpha * alpha / 2520.0;
  if (alpha < 1.0) {
    return alternating_series(alpha * alpha,
                              [](int m) { return (m + 1) * inverse_factorial(2 * m + 5); });
  }
  const double a5 = std::pow(alpha, 5);
  return (2.0 * alpha - 3.0 * std::sin(alpha) + alpha * std::cos(alpha)) / (2.0 * a5);
}

// Coupling block Q(phi, rho) of the SE(3)-style left Jacobian.
Matrix3 q_block(const Vector3& phi, const Vector3& rho) {
  const double alpha = phi.norm();
  const so3::Coefficients k = so3::coefficients(alpha);
  const Matrix3 P = hat(phi);
  const Matrix3 Rh = hat(rho);
  const Matrix3 PR = P * Rh;
  const Matrix3 RP = Rh * P;
  const Matrix3 PRP = PR * P;
  const Matrix3 PP = P * P;
  return 0.5 * Rh + k.C * (PR + RP + PRP) + k.E * (PP * Rh + RP * P - 3.0 * PRP) +
         q3_coeff(alpha) * (PRP * P + P * PRP);
}

}  // namespace

Matrix3 hat(const Vector3& v) {
  Matrix3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

Vector3 vee(const Matrix3& m) { return Vector3(m(2, 1), m(0, 2), m(1, 0)); }

namespace so3 {

Coefficients coefficients(double alpha) {
  const double a2 = alpha * alpha;
  if (alpha < kSmallAngle) {
    return {1.0 - a2 / 6.0, 0.5 - a2 / 24.0, 1.0 / 6.0 - a2 / 120.0, 1.0 / 24.0 - a2 / 720.0};
  }
  Coefficients k{};
  k.A = std::sin(alpha) / alpha;
  const double s = std::sin(0.5 * alpha);
  k.B = 2.0 * s * s / a2;
  if (alpha < 1.0) {
    // The closed forms of C and E cancel catastrophically at small angles.
    k.C = alternating_series(a2, [](int m) { return inverse_factorial(2 * m + 3); });
    k.E = alternating_series(a2, [](int m) { return inverse_factorial(2 * m + 4); });
  } else {
    k.C = (alpha - std::sin(alpha)) / (a2 * alpha);
    k.E = (a2 - 2.0 + 2.0 * std::cos(alpha)) / (2.0 * a2 * a2);
  }
  return k;
}

Matrix3 exp(const Vector3& theta) {
  const Coefficients k = coefficients(theta.norm());
  const Matrix3 W = hat(theta);
  return Matrix3::Identity() + k.A * W + k.B * W * W;
}

Vector3 log(const Matrix3& R) {
  Eigen::Quaterniond q(R);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  const Vector3 v = q.vec();
  const double n = v.norm();
  const double w = q.w();
  if (n < 1e-8) {
    // 2 atan(n/w)/n ~ (2/w)(1 - n^2/(3 w^2))
    return (2.0 / w) * (1.0 - n * n / (3.0 * w * w)) * v;
  }
  return (2.0 * std::atan2(n, w) / n) * v;
}

Matrix3 left_jacobian(const Vector3& theta) {
  const Coefficients k = coefficients(theta.norm());
  const Matrix3 W = hat(theta);
  return Matrix3::Identity() + k.B * W + k.C * W * W;
}

Matrix3 left_jacobian_inverse(const Vector3& theta) {
  const Matrix3 W = hat(theta);
  return Matrix3::Identity() - 0.5 * W + left_jacobian_inverse_coeff(theta.norm()) * W * W;
}

Matrix3 right_jacobian(const Vector3& theta) { return left_jacobian(-theta); }

Matrix3 right_jacobian_inverse(const Vector3& theta) { return left_jacobian_inverse(-theta); }

Matrix3 gamma_left(const Vector3& theta) {
  const Coefficients k = coefficients(theta.norm());
  const Matrix3 W = hat(theta);
  return 0.5 * Matrix3::Identity() + k.C * W + k.E * W * W;
}

double orthogonality_defect(const Matrix3& R) {
  return (R.transpose() * R - Matrix3::Identity()).cwiseAbs().maxCoeff();
}

Matrix3 project_to_rotation(const Matrix3& R) {
  Eigen::JacobiSVD<Matrix3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 D = Matrix3::Identity();
  D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * D * svd.matrixV().transpose();
}

Matrix3 renormalize(const Matrix3& R) {
  return orthogonality_defect(R) > 1e-9 ? project_to_rotation(R) : R;
}

}  // namespace so3

SEK3::SEK3(int num_columns)
    : rotation_(Matrix3::Identity()), columns_(Eigen::Matrix3Xd::Zero(3, num_columns)) {
  if (num_columns < 0) throw DimensionError("SEK3: negative column count");
}

SEK3::SEK3(const Matrix3& rotation, const Eigen::Matrix3Xd& columns)
    : rotation_(rotation), columns_(columns) {}

void SEK3::set_column(int i, const Vector3& x) {
  if (i < 0 || i >= num_columns()) throw DimensionError("SEK3: column index out of range");
  columns_.col(i) = x;
}

SEK3 SEK3::compose(const SEK3& other) const {
  if (other.num_columns() != num_columns()) {
    throw DimensionError("SEK3::compose: column counts differ (" +
                         std::to_string(num_columns()) + " vs " +
                         std::to_string(other.num_columns()) + ")");
  }
  Eigen::Matrix3Xd cols = columns_ + rotation_ * other.columns_;
  return SEK3(so3::renormalize(rotation_ * other.rotation_), cols);
}

SEK3 SEK3::inverse() const {
  const Matrix3 Rt = rotation_.transpose();
  return SEK3(Rt, -Rt * columns_);
}

SEK3 SEK3::exp(const Eigen::Ref<const Vector>& xi) {
  if (xi.size() % 3 != 0 || xi.size() < 3) {
    throw DimensionError("SEK3::exp: tangent size must be 3(K+1)");
  }
  const int K = static_cast<int>(xi.size() / 3) - 1;
  const Vector3 phi = xi.head<3>();
  const Matrix3 Jl = so3::left_jacobian(phi);
  Eigen::Matrix3Xd cols(3, K);
  for (int i = 0; i < K; ++i) cols.col(i) = Jl * xi.segment<3>(3 * (i + 1));
  return SEK3(so3::exp(phi), cols);
}

Vector SEK3::log() const {
  const Vector3 phi = so3::log(rotation_);
  if (phi.norm() >= M_PI - 1e-6) {
    throw DomainError("SEK3::log: rotation angle too close to pi");
  }
  const Matrix3 Jinv = so3::left_jacobian_inverse(phi);
  Vector xi(dim());
  xi.head<3>() = phi;
  for (int i = 0; i < num_columns(); ++i) xi.segment<3>(3 * (i + 1)) = Jinv * columns_.col(i);
  return xi;
}

Matrix SEK3::adjoint() const {
  const int n = dim();
  Matrix Ad = Matrix::Zero(n, n);
  Ad.topLeftCorner<3, 3>() = rotation_;
  for (int i = 0; i < num_columns(); ++i) {
    const int r = 3 * (i + 1);
    Ad.block<3, 3>(r, 0) = hat(columns_.col(i)) * rotation_;
    Ad.block<3, 3>(r, r) = rotation_;
  }
  return Ad;
}

Matrix SEK3::matrix() const {
  const int K = num_columns();
  Matrix M = Matrix::Identity(3 + K, 3 + K);
  M.topLeftCorner<3, 3>() = rotation_;
  M.topRightCorner(3, K) = columns_;
  return M;
}

bool SEK3::is_approx(const SEK3& other, double tol) const {
  if (other.num_columns() != num_columns()) return false;
  return (rotation_ - other.rotation_).cwiseAbs().maxCoeff() <= tol &&
         (num_columns() == 0 || (columns_ - other.columns_).cwiseAbs().maxCoeff() <= tol);
}

Matrix sek3_left_jacobian(const Eigen::Ref<const Vector>& xi) {
  const int n = static_cast<int>(xi.size());
  const Vector3 phi = xi.head<3>();
  const Matrix3 Jl = so3::left_jacobian(phi);
  Matrix J = Matrix::Zero(n, n);
  J.topLeftCorner<3, 3>() = Jl;
  for (int r = 3; r < n; r += 3) {
    J.block<3, 3>(r, 0) = q_block(phi, xi.segment<3>(r));
    J.block<3, 3>(r, r) = Jl;
  }
  return J;
}

Matrix sek3_left_jacobian_inverse(const Eigen::Ref<const Vector>& xi) {
  const int n = static_cast<int>(xi.size());
  const Vector3 phi = xi.head<3>();
  const Matrix3 Jinv = so3::left_jacobian_inverse(phi);
  Matrix J = Matrix::Zero(n, n);
  J.topLeftCorner<3, 3>() = Jinv;
  for (int r = 3; r < n; r += 3) {
    J.block<3, 3>(r, 0) = -Jinv * q_block(phi, xi.segment<3>(r)) * Jinv;
    J.block<3, 3>(r, r) = Jinv;
  }
  return J;
}

Matrix sek3_right_jacobian(const Eigen::Ref<const Vector>& xi) {
  const Vector neg = -xi;
  return sek3_left_jacobian(neg);
}

Matrix sek3_right_jacobian_inverse(const Eigen::Ref<const Vector>& xi) {
  const Vector neg = -xi;
  return sek3_left_jacobian_inverse(neg);
}

}  // namespace legged
