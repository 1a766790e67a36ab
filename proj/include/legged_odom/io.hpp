#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Geometry>

#include "legged_odom/contact.hpp"
#include "legged_odom/estimator.hpp"

namespace legged {

struct GroundTruthPose {
  double t = 0.0;
  Vector3 position = Vector3::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

using LogRecord = std::variant<ImuSample, ContactPacket, GroundTruthPose>;

double record_time(const LogRecord& record);

/**
 * Reads line-delimited JSON records:
 *   {"type":"imu","t":s,"w":[x,y,z],"a":[x,y,z]}
 *   {"type":"contact","t":s,"feet":[{"id":i,"p":[x,y,z],"touchdown":bool}]}
 *   {"type":"gt","t":s,"p":[x,y,z],"q":[qx,qy,qz,qw]}
 * Blank lines are skipped. The result is sorted by time with IMU before
 * contact before ground truth on ties. Throws ParseError (with the 1-based
 * line number) on malformed lines or a time going backwards within a stream.
 */
std::vector<LogRecord> parse_log(std::istream& in);
std::vector<LogRecord> parse_log(const std::filesystem::path& path);

/// Serializes one record as a single JSON line (no trailing newline).
std::string format_record(const LogRecord& record);

/// Maps contact points and IMU vectors into the body frame; ground truth is unchanged.
LogRecord apply_extrinsics(const LogRecord& record, const Extrinsic& extrinsic);

struct StampedPose {
  double t = 0.0;
  Matrix3 rotation = Matrix3::Identity();
  Vector3 position = Vector3::Zero();
};

/// TUM lines `t x y z qx qy qz qw`; time with 9 decimals, the rest with 9 significant digits.
void write_trajectory(std::ostream& out, std::span<const StampedPose> poses);
void write_trajectory(const std::filesystem::path& path, std::span<const StampedPose> poses);
std::vector<StampedPose> read_trajectory(std::istream& in);
std::vector<StampedPose> read_trajectory(const std::filesystem::path& path);

/**
 * Estimator configuration from JSON. Every key is optional; unknown keys are
 * rejected. See README for the key set. Throws ParseError.
 */
EstimatorConfig parse_config(const std::string& json_text);
EstimatorConfig load_config(const std::filesystem::path& path);
std::string format_config(const EstimatorConfig& config);

}  // namespace legged
