#pragma once

#include "legged_odom/liegroup.hpp"

namespace legged {

struct ImuSample {
  double t = 0.0;
  Vector3 gyro = Vector3::Zero();   ///< rad/s, body frame
  Vector3 accel = Vector3::Zero();  ///< m/s^2, specific force in body frame
};

struct ImuBias {
  Vector3 gyro = Vector3::Zero();
  Vector3 accel = Vector3::Zero();

  /// Stacked [b_g; b_a].
  Eigen::Matrix<double, 6, 1> vector() const;
  static ImuBias from_vector(const Eigen::Ref<const Vector>& v);
};

/// Continuous-time noise densities and measurement sigmas shared by all estimators.
struct NoiseConfig {
  double gyro_noise_density = 1.7e-4;       ///< rad/s/sqrt(Hz)
  double accel_noise_density = 2.0e-3;      ///< m/s^2/sqrt(Hz)
  double gyro_bias_rw_density = 1.0e-5;     ///< rad/s^2/sqrt(Hz)
  double accel_bias_rw_density = 1.0e-4;    ///< m/s^3/sqrt(Hz)
  double contact_sigma = 0.03;              ///< m
  double foothold_init_sigma = 1.0e3;       ///< m
  double height_sigma = 0.05;               ///< m
  double foothold_slip_density = 1.0e-3;    ///< m/sqrt(s), filter process noise only

  /// Throws InputError unless every entry is strictly positive.
  void validate() const;
};

/// Which SE_K(3) columns carry position and velocity; all others are footholds.
struct NavSlots {
  int position = 0;
  int velocity = 1;
};

/// W: identity rotation, (1/2) g dt^2 in the position column, g dt in the velocity column.
SEK3 gravity_factor(const Vector3& gravity, double dt, int num_columns, NavSlots slots = {});

/// phi(X): p <- p + v dt, everything else unchanged.
SEK3 autonomous_flow(const SEK3& X, double dt, NavSlots slots = {});

/// Differential of phi at identity: identity plus dt*I in the position-velocity block.
Matrix flow_differential(double dt, int num_columns, NavSlots slots = {});

/// U: single-sample zero-order-hold body increment from bias-corrected gyro/accel.
SEK3 imu_increment(const ImuSample& sample, const ImuBias& bias, double dt, int num_columns,
                   NavSlots slots = {});

struct Prediction {
  SEK3 state;
  Matrix jacobian;  ///< A = Ad_{U^-1} Phi with foothold blocks Omega^T
};

/// X+ = W phi(X) U and the state-independent error Jacobian.
Prediction predict(const SEK3& X, const ImuSample& sample, const ImuBias& bias,
                   const Vector3& gravity, double dt, NavSlots slots = {});

/// Additive right-perturbation process noise for one prediction step.
Matrix process_noise(const NoiseConfig& noise, double dt, int num_columns, NavSlots slots = {});

}  // namespace legged
