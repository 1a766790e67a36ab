#pragma once

#include "legged_odom/factor.hpp"
#include "legged_odom/preintegration.hpp"

namespace legged {

/// Default Huber threshold for robust contact factors, in whitened units.
inline constexpr double kDefaultHuberThreshold = 1.345;

/// Predicted measurement and Jacobian rows for the filter chart.
struct FilterMeasurement {
  Vector residual;  ///< z - h(X)
  Matrix H;         ///< dh/dxi over the full state tangent
};

/**
 * Contact model R^T (f_slot - p) on the filter state. Jacobian blocks:
 * attitude hat(z_hat), position -I, the foot slot +I (constant), zeros elsewhere.
 */
FilterMeasurement contact_residual_filter(const SEK3& X, int foot_column,
                                          const Vector3& measured, NavSlots slots = {});

/// Height prior on a filter foot slot: residual h - f_z, row e3^T R on the foot block.
FilterMeasurement height_residual_filter(const SEK3& X, int foot_column, double height);

/// Contact factor on the filter state (graph-update filter). r = h(X) - z.
class FilterContactFactor : public Factor {
 public:
  FilterContactFactor(Key state, int foot_column, Vector3 measured, NoiseModel noise,
                      NavSlots slots = {});
  Vector evaluate(const Values& values, std::vector<Matrix>* H) const override;

 private:
  int column_;
  Vector3 measured_;
  NavSlots slots_;
};

/// Height factor on a filter foot slot. r = f_z - h.
class FilterHeightFactor : public Factor {
 public:
  FilterHeightFactor(Key state, int foot_column, double height, double sigma);
  Vector evaluate(const Values& values, std::vector<Matrix>* H) const override;

 private:
  int column_;
  double height_;
};

/**
 * Contact between an event nav-state (SE_2(3), columns [p, v]) and an
 * explicit navigation-frame foothold point: r = R^T (l - p) - z.
 */
class LandmarkContactFactor : public Factor {
 public:
  LandmarkContactFactor(Key nav, Key landmark, Vector3 measured, NoiseModel noise);
  Vector evaluate(const Values& values, std::vector<Matrix>* H) const override;

 private:
  Vector3 measured_;
};

/// Height prior directly on a foothold landmark: r = l_z - h.
class LandmarkHeightFactor : public Factor {
 public:
  LandmarkHeightFactor(Key landmark, double height, double sigma);
  Vector evaluate(const Values& values, std::vector<Matrix>* H) const override;

 private:
  double height_;
};

/// Builds the landmark contact factor, optionally with a Huber loss.
FactorPtr contact_factor_landmark(Key nav, Key landmark, const Vector3& measured, double sigma,
                                  bool robust, double huber_threshold = kDefaultHuberThreshold);

/// Preintegrated IMU factor between two nav-states sharing one bias variable.
class ImuFactor : public Factor {
 public:
  ImuFactor(Key nav_i, Key nav_j, Key bias, PreintegratedImu pim, Vector3 gravity);
  Vector evaluate(const Values& values, std::vector<Matrix>* H) const override;
  const PreintegratedImu& preintegrated() const { return pim_; }

 private:
  PreintegratedImu pim_;
  Vector3 gravity_;
};

/**
 * Preintegrated factor with per-event biases: residual [preintegrated at
 * bias_i; b_j - b_i], bias block noise dt * diag(gyro/accel random-walk PSD).
 */
class CombinedImuFactor : public Factor {
 public:
  CombinedImuFactor(Key nav_i, Key nav_j, Key bias_i, Key bias_j, PreintegratedImu pim,
                    Vector3 gravity);
  Vector evaluate(const Values& values, std::vector<Matrix>* H) const override;
  const PreintegratedImu& preintegrated() const { return pim_; }

  /// Noise covariance of the 15-dim residual.
  static Matrix covariance(const PreintegratedImu& pim);

 private:
  PreintegratedImu pim_;
  Vector3 gravity_;
};

}  // namespace legged
