#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "legged_odom/io.hpp"

namespace legged {

/**
 * Trot-style gait: feet split into two groups by (row + side) % 2, half a
 * cycle apart. Foot i sits at row i / 2 (front first) and side i % 2 (left
 * first). With zero stride the robot stands with every foot in stance.
 */
struct GaitConfig {
  double cadence = 2.0;       ///< gait cycles per second
  double stride = 0.25;       ///< m per cycle; forward speed = stride * cadence
  double duty = 0.6;          ///< stance fraction of a cycle, in (0, 1)
  int foot_count = 4;         ///< even, >= 2
  double duration = 10.0;     ///< s
  double imu_rate = 400.0;    ///< Hz
  int contact_decimation = 2; ///< one contact packet every this many IMU samples
  double body_height = 0.5;   ///< m above the terrain
  double half_length = 0.3;   ///< m, hip offset along body x
  double half_width = 0.2;    ///< m, hip offset along body y
  double bob_amplitude = 0.0;     ///< m, vertical oscillation at twice the cadence
  double wobble_amplitude = 0.0;  ///< rad, roll/pitch oscillation at the cadence
  double yaw_rate = 0.0;          ///< rad/s, constant turn
  bool noise = false;
  std::uint64_t seed = 0;
  NoiseConfig noise_config;
  ImuBias bias;  ///< constant bias added when noise is on
  Vector3 gravity{0.0, 0.0, -9.81};

  /// Throws InputError on an inconsistent configuration.
  void validate() const;
};

struct SyntheticLog {
  std::vector<LogRecord> records;          ///< imu and contact records, time-ordered
  std::vector<StampedPose> ground_truth;   ///< at every IMU timestamp
  std::vector<Vector3> ground_truth_velocity;
  EstimatorConfig config;                  ///< feet, noise and true initial state
};

/**
 * Builds IMU samples whose zero-order-hold integration reproduces the
 * desired attitude and velocity at every IMU timestamp; the ground truth is
 * that integration. Contact points are R^T (f - p) of the ground truth at the
 * packet times, plus noise when enabled.
 */
SyntheticLog generate_synthetic(const GaitConfig& gait);

/// Writes log.jsonl (imu, contact and gt records), gt.tum and config.json into `dir`.
void write_synthetic(const SyntheticLog& log, const std::filesystem::path& dir);

/// Parses a gait JSON object; unknown keys are rejected. Throws ParseError.
GaitConfig parse_gait_config(const std::string& json_text);

}  // namespace legged
