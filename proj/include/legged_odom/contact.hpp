#pragma once

#include <vector>

#include "legged_odom/liegroup.hpp"

namespace legged {

struct ContactMeasurement {
  int foot_id = 0;
  Vector3 position = Vector3::Zero();  ///< base-to-foot vector in the body frame (m)
  bool touchdown = false;
};

/// Stance set at one instant; feet absent from `feet` are in swing.
struct ContactPacket {
  double t = 0.0;
  std::vector<ContactMeasurement> feet;
};

/// Rigid transform from a sensor frame into the estimator body frame.
struct Extrinsic {
  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();
};

}  // namespace legged
