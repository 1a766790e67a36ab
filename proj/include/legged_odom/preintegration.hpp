#pragma once

#include <span>

#include "legged_odom/imu_model.hpp"

namespace legged {

using Matrix9 = Eigen::Matrix<double, 9, 9>;
using Vector9 = Eigen::Matrix<double, 9, 1>;

/// Bias-corrected relative increment between two events.
struct ImuIncrement {
  Matrix3 rotation = Matrix3::Identity();
  Vector3 position = Vector3::Zero();
  Vector3 velocity = Vector3::Zero();
};

/**
 * Relative SE_2(3) increment accumulated from zero-order-hold IMU samples at
 * a fixed bias linearization point.
 *
 * Each interval composes the exact single-sample kernels (Omega, J_l, Gamma_l),
 * so chaining the filter prediction X+ = W phi(X) U over the same samples
 * reproduces the increment exactly. The covariance is over the tangent
 * [phi, p, v] of the increment, matching the residual ordering below.
 */
class PreintegratedImu {
 public:
  PreintegratedImu() = default;
  PreintegratedImu(const ImuBias& linearization_bias, const NoiseConfig& noise);

  /// Integrates one held measurement over dt > 0.
  void integrate(const Vector3& gyro, const Vector3& accel, double dt);

  void reset(const ImuBias& linearization_bias);

  const Matrix3& delta_rotation() const { return delta_rotation_; }
  const Vector3& delta_position() const { return delta_position_; }
  const Vector3& delta_velocity() const { return delta_velocity_; }
  double delta_time() const { return delta_time_; }
  const Matrix9& covariance() const { return covariance_; }
  const ImuBias& linearization_bias() const { return bias_hat_; }
  const NoiseConfig& noise() const { return noise_; }

  const Matrix3& d_rotation_d_gyro_bias() const { return dR_dbg_; }
  const Matrix3& d_position_d_gyro_bias() const { return dp_dbg_; }
  const Matrix3& d_position_d_accel_bias() const { return dp_dba_; }
  const Matrix3& d_velocity_d_gyro_bias() const { return dv_dbg_; }
  const Matrix3& d_velocity_d_accel_bias() const { return dv_dba_; }

  /// First-order correction of the increments to a new bias.
  ImuIncrement bias_correct(const ImuBias& bias) const;

  /// Predicts the nav-state (SE_2(3), columns [p, v]) at the end of the interval.
  SEK3 predict(const SEK3& nav_i, const ImuBias& bias, const Vector3& gravity) const;

  /**
   * Residual [r_R, r_p, r_v]:
   *   r_R = Log(dR(b)^T R_i^T R_j)
   *   r_p = R_i^T (p_j - p_i - v_i dt - g dt^2 / 2) - dp(b)
   *   r_v = R_i^T (v_j - v_i - g dt) - dv(b)
   * Jacobians are with respect to right perturbations of the nav-states and
   * additive bias [b_g; b_a].
   */
  Vector9 residual(const SEK3& nav_i, const SEK3& nav_j, const ImuBias& bias,
                   const Vector3& gravity, Matrix* H_i = nullptr, Matrix* H_j = nullptr,
                   Matrix* H_bias = nullptr) const;

 private:
  NoiseConfig noise_;
  ImuBias bias_hat_;
  double delta_time_ = 0.0;
  Matrix3 delta_rotation_ = Matrix3::Identity();
  Vector3 delta_position_ = Vector3::Zero();
  Vector3 delta_velocity_ = Vector3::Zero();
  Matrix9 covariance_ = Matrix9::Zero();
  Matrix3 dR_dbg_ = Matrix3::Zero();
  Matrix3 dp_dbg_ = Matrix3::Zero();
  Matrix3 dp_dba_ = Matrix3::Zero();
  Matrix3 dv_dbg_ = Matrix3::Zero();
  Matrix3 dv_dba_ = Matrix3::Zero();
};

/**
 * Preintegrates a sample list; sample k is held over [t_k, t_{k+1}) and the
 * last one over [t_last, end_time]. Throws InputError on an empty list or
 * non-increasing timestamps.
 */
PreintegratedImu preintegrate(std::span<const ImuSample> samples, double end_time,
                              const ImuBias& bias, const NoiseConfig& noise);

}  // namespace legged
