#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "legged_odom/metrics.hpp"

namespace legged {

struct ReplayOptions {
  /// Rate (Hz) of dead-reckoned poses between updates; 0 emits update poses only.
  double output_rate = 100.0;
};

struct ReplayResult {
  std::vector<StampedPose> trajectory;  ///< time-ordered, one pose per distinct time
  int scheduled_updates = 0;
  double initialization_time = 0.0;
};

/**
 * Runs one estimator over a time-ordered record stream (ground-truth records
 * are ignored). Extrinsics from the config are applied to every record.
 * Emits the estimate at every scheduled update and, between them, poses at
 * `output_rate` sampled at IMU timestamps. Throws InputError if no
 * full-contact packet ever initializes the estimator.
 */
ReplayResult replay(std::span<const LogRecord> records, const EstimatorConfig& config,
                    const ReplayOptions& options = {});

/// Ground-truth records of a stream as poses.
std::vector<StampedPose> ground_truth_of(std::span<const LogRecord> records);

/**
 * Writes, per named trajectory, `<name>_xy.csv` (x,y), `<name>_z.csv` (t,z)
 * and `<name>_error.csv` (t,ex,ey,ez: aligned position error against
 * `ground_truth`; header only without ground truth or associations).
 */
void emit_plot_data(const std::map<std::string, std::vector<StampedPose>>& trajectories,
                    const std::vector<StampedPose>& ground_truth,
                    const std::filesystem::path& out_dir);

}  // namespace legged
