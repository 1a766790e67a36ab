#include "legged_odom/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>

#include "legged_odom/errors.hpp"

namespace legged {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

struct DesiredMotion {
  const GaitConfig& g;

  double speed() const { return g.stride * g.cadence; }
  double yaw(double t) const { return g.yaw_rate * t; }
  double bob_rate() const { return 2.0 * kTwoPi * g.cadence; }

  Matrix3 rotation(double t) const {
    const double w = kTwoPi * g.cadence * t;
    const double roll = g.wobble_amplitude * std::sin(w);
    const double pitch = g.wobble_amplitude * std::cos(w);
    return (Eigen::AngleAxisd(yaw(t), Vector3::UnitZ()) *
            Eigen::AngleAxisd(pitch, Vector3::UnitY()) *
            Eigen::AngleAxisd(roll, Vector3::UnitX()))
        .toRotationMatrix();
  }

  Vector3 position(double t) const {
    Vector3 p;
    if (std::abs(g.yaw_rate) < 1e-12) {
      p << speed() * t, 0.0, 0.0;
    } else {
      const double r = speed() / g.yaw_rate;
      p << r * std::sin(yaw(t)), r * (1.0 - std::cos(yaw(t))), 0.0;
    }
    p.z() = g.body_height + g.bob_amplitude * std::sin(bob_rate() * t);
    return p;
  }

  Vector3 velocity(double t) const {
    Vector3 v(speed() * std::cos(yaw(t)), speed() * std::sin(yaw(t)), 0.0);
    v.z() = g.bob_amplitude * bob_rate() * std::cos(bob_rate() * t);
    return v;
  }
};

bool standing(const GaitConfig& g) { return g.stride == 0.0 && g.yaw_rate == 0.0; }

int foot_group(int foot) { return (foot / 2 + foot % 2) % 2; }

Vector3 hip_offset(const GaitConfig& g, int foot) {
  const int row = foot / 2;
  const int side = foot % 2;
  return {row == 0 ? g.half_length : -g.half_length, side == 0 ? g.half_width : -g.half_width,
          0.0};
}

constexpr long kSwing = std::numeric_limits<long>::min();

// Stance cycle index of a foot at time t, or kSwing.
long stance_cycle(const GaitConfig& g, int foot, double t) {
  if (standing(g)) return 0;
  const double u = g.cadence * t - 0.5 * foot_group(foot);
  const double n = std::floor(u);
  return (u - n) < g.duty ? static_cast<long>(n) : kSwing;
}

Vector3 foothold(const GaitConfig& g, const DesiredMotion& d, int foot, long cycle) {
  const double tm =
      standing(g) ? 0.0 : (cycle + 0.5 * g.duty + 0.5 * foot_group(foot)) / g.cadence;
  Vector3 f = d.position(tm) + Eigen::AngleAxisd(d.yaw(tm), Vector3::UnitZ()) * hip_offset(g, foot);
  f.z() = 0.0;
  return f;
}

}  // namespace

void GaitConfig::validate() const {
  if (!(cadence > 0.0)) throw InputError("gait: cadence must be > 0");
  if (!(stride >= 0.0)) throw InputError("gait: stride must be >= 0");
  if (!(duty > 0.0 && duty < 1.0)) throw InputError("gait: duty factor must be in (0, 1)");
  if (foot_count < 2 || foot_count % 2 != 0) throw InputError("gait: foot_count must be even and >= 2");
  if (!(duration > 0.0)) throw InputError("gait: duration must be > 0");
  if (!(imu_rate > 0.0)) throw InputError("gait: imu_rate must be > 0");
  if (contact_decimation < 1) throw InputError("gait: contact_decimation must be >= 1");
  if (!(body_height > 0.0)) throw InputError("gait: body_height must be > 0");
  if (!(bob_amplitude >= 0.0 && wobble_amplitude >= 0.0)) {
    throw InputError("gait: amplitudes must be >= 0");
  }
  noise_config.validate();
}

SyntheticLog generate_synthetic(const GaitConfig& g) {
  g.validate();
  const DesiredMotion d{g};
  const double dt = 1.0 / g.imu_rate;
  const long n = std::lround(g.duration * g.imu_rate);
  const ImuBias zero;

  std::mt19937_64 rng(g.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian3 = [&](double sigma) {
    Vector3 v;
    for (int i = 0; i < 3; ++i) v(i) = sigma * normal(rng);
    return v;
  };

  SyntheticLog out;
  Eigen::Matrix<double, 3, Eigen::Dynamic> cols(3, 2);
  cols << d.position(0.0), d.velocity(0.0);
  SEK3 state(d.rotation(0.0), cols);

  auto emit_truth = [&](double t) {
    out.ground_truth.push_back({t, state.rotation(), state.column(0)});
    out.ground_truth_velocity.push_back(state.column(1));
  };

  std::vector<long> previous_cycle(g.foot_count, kSwing);
  auto emit_contact = [&](double t, bool first) {
    ContactPacket packet;
    packet.t = t;
    for (int foot = 0; foot < g.foot_count; ++foot) {
      const long cycle = stance_cycle(g, foot, t);
      if (cycle != kSwing) {
        ContactMeasurement m;
        m.foot_id = foot;
        m.position = state.rotation().transpose() * (foothold(g, d, foot, cycle) - state.column(0));
        if (g.noise) m.position += gaussian3(g.noise_config.contact_sigma);
        m.touchdown = !first && previous_cycle[foot] != cycle;
        packet.feet.push_back(m);
      }
      previous_cycle[foot] = cycle;
    }
    out.records.emplace_back(std::move(packet));
  };

  const double sg = g.noise_config.gyro_noise_density / std::sqrt(dt);
  const double sa = g.noise_config.accel_noise_density / std::sqrt(dt);
  for (long k = 0; k < n; ++k) {
    const double t = k * dt;
    const double t1 = (k + 1) * dt;
    emit_truth(t);
    if (k % g.contact_decimation == 0) emit_contact(t, k == 0);

    // Exact zero-order-hold inputs that land on the desired attitude and velocity at t1.
    const Vector3 theta = so3::log(state.rotation().transpose() * d.rotation(t1));
    const Vector3 dv = d.velocity(t1) - state.column(1) - g.gravity * dt;
    const Vector3 accel =
        so3::left_jacobian_inverse(theta) * (state.rotation().transpose() * dv) / dt;
    ImuSample truth{t, theta / dt, accel};
    state = predict(state, truth, zero, g.gravity, dt).state;

    ImuSample measured = truth;
    if (g.noise) {
      measured.gyro += g.bias.gyro + gaussian3(sg);
      measured.accel += g.bias.accel + gaussian3(sa);
    }
    out.records.emplace_back(measured);
  }
  const double t_end = n * dt;
  emit_truth(t_end);
  if (n % g.contact_decimation == 0) emit_contact(t_end, false);

  // IMU sample k and the contact packet at the same time: IMU first.
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const LogRecord& a, const LogRecord& b) {
                     const double ta = record_time(a), tb = record_time(b);
                     if (ta != tb) return ta < tb;
                     return a.index() < b.index();
                   });

  EstimatorConfig& c = out.config;
  c.feet.clear();
  for (int foot = 0; foot < g.foot_count; ++foot) c.feet.push_back(foot);
  c.noise = g.noise_config;
  c.gravity = g.gravity;
  c.initial_rotation = out.ground_truth.front().rotation;
  c.initial_position = out.ground_truth.front().position;
  c.initial_velocity = out.ground_truth_velocity.front();
  return out;
}

void write_synthetic(const SyntheticLog& log, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<LogRecord> all = log.records;
  for (const auto& p : log.ground_truth) {
    all.emplace_back(GroundTruthPose{p.t, p.position, Eigen::Quaterniond(p.rotation)});
  }
  std::stable_sort(all.begin(), all.end(), [](const LogRecord& a, const LogRecord& b) {
    const double ta = record_time(a), tb = record_time(b);
    if (ta != tb) return ta < tb;
    return a.index() < b.index();
  });
  std::ofstream out(dir / "log.jsonl");
  if (!out) throw std::runtime_error("cannot write " + (dir / "log.jsonl").string());
  for (const auto& r : all) out << format_record(r) << '\n';
  write_trajectory(dir / "gt.tum", log.ground_truth);
  std::ofstream cfg(dir / "config.json");
  cfg << format_config(log.config);
  if (!out || !cfg) throw std::runtime_error("write_synthetic: write failed");
}

GaitConfig parse_gait_config(const std::string& text) {
  GaitConfig g;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("gait config must be an object");
    for (const auto& [key, v] : j.items()) {
      if (key == "cadence") g.cadence = v.get<double>();
      else if (key == "stride") g.stride = v.get<double>();
      else if (key == "duty") g.duty = v.get<double>();
      else if (key == "foot_count") g.foot_count = v.get<int>();
      else if (key == "duration") g.duration = v.get<double>();
      else if (key == "imu_rate") g.imu_rate = v.get<double>();
      else if (key == "contact_decimation") g.contact_decimation = v.get<int>();
      else if (key == "body_height") g.body_height = v.get<double>();
      else if (key == "half_length") g.half_length = v.get<double>();
      else if (key == "half_width") g.half_width = v.get<double>();
      else if (key == "bob_amplitude") g.bob_amplitude = v.get<double>();
      else if (key == "wobble_amplitude") g.wobble_amplitude = v.get<double>();
      else if (key == "yaw_rate") g.yaw_rate = v.get<double>();
      else if (key == "noise") g.noise = v.get<bool>();
      else if (key == "seed") g.seed = v.get<std::uint64_t>();
      else if (key == "bias_gyro") g.bias.gyro = Vector3(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
      else if (key == "bias_accel") g.bias.accel = Vector3(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
      else if (key == "noise_config") {
        // Reuse the estimator config parser for the noise block.
        g.noise_config = parse_config(nlohmann::json{{"noise", v}}.dump()).noise;
      } else {
        throw std::invalid_argument("unknown key '" + key + "' in gait config");
      }
    }
    g.validate();
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid gait config: ") + e.what());
  }
  return g;
}

}  // namespace legged
