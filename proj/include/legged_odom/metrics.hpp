#pragma once

#include <span>
#include <string>
#include <vector>

#include "legged_odom/io.hpp"

namespace legged {

/// RMSE trajectory errors. Rotations in degrees, translations in meters.
struct MetricsReport {
  std::string name;
  std::size_t pose_count = 0;  ///< associated pose pairs
  std::size_t rpe_pairs = 0;
  double rpe_delta = 1.0;
  double ape_t = 0.0;
  double ape_r = 0.0;
  double rpe_t = 0.0;
  double rpe_r = 0.0;
  double ape_z = 0.0;
};

struct RigidTransform {
  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();
};

/// Least-squares rotation + translation (no scale) with gt ~ R * est + t.
RigidTransform align_rigid(std::span<const Vector3> est, std::span<const Vector3> gt);

/// Index pairs (est, gt) matched by nearest timestamp within `max_dt`.
std::vector<std::pair<std::size_t, std::size_t>> associate(std::span<const StampedPose> est,
                                                           std::span<const StampedPose> gt,
                                                           double max_dt = 0.01);

/**
 * APE after one rigid alignment of the whole estimate; APE_z is the vertical
 * component of the aligned error. RPE compares relative motions of pairs
 * separated by `rpe_delta` seconds (the partner is the associated pose whose
 * time is nearest t + delta, within the association tolerance), without
 * alignment. Throws InputError with fewer than two associations.
 */
MetricsReport evaluate(std::span<const StampedPose> est, std::span<const StampedPose> gt,
                       double rpe_delta = 1.0, double max_dt = 0.01);

std::string format_report(const MetricsReport& report);

}  // namespace legged
