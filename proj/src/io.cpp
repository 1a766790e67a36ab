#include "legged_odom/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "legged_odom/errors.hpp"

namespace legged {

using nlohmann::json;

namespace {

Vector3 vec3(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument(std::string("'") + field + "' must be an array of 3 numbers");
  }
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json to_json(const Vector3& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Quaterniond quat(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 4) {
    throw std::invalid_argument(std::string("'") + field + "' must be [qx, qy, qz, qw]");
  }
  Eigen::Quaterniond q(j.at(3).get<double>(), j.at(0).get<double>(), j.at(1).get<double>(),
                       j.at(2).get<double>());
  const double n = q.norm();
  if (!(std::abs(n - 1.0) < 1e-6)) {
    throw std::invalid_argument(std::string("'") + field + "' is not a unit quaternion");
  }
  q.normalize();
  return q;
}

json to_json(const Eigen::Quaterniond& q) { return json::array({q.x(), q.y(), q.z(), q.w()}); }

int stream_rank(const LogRecord& r) { return static_cast<int>(r.index()); }

LogRecord parse_record(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  const double t = j.at("t").get<double>();
  if (!std::isfinite(t)) throw std::invalid_argument("non-finite timestamp");
  if (type == "imu") {
    return ImuSample{t, vec3(j.at("w"), "w"), vec3(j.at("a"), "a")};
  }
  if (type == "contact") {
    ContactPacket p;
    p.t = t;
    for (const json& f : j.at("feet")) {
      ContactMeasurement m;
      m.foot_id = f.at("id").get<int>();
      m.position = vec3(f.at("p"), "p");
      m.touchdown = f.value("touchdown", false);
      p.feet.push_back(m);
    }
    return p;
  }
  if (type == "gt") {
    return GroundTruthPose{t, vec3(j.at("p"), "p"), quat(j.at("q"), "q")};
  }
  throw std::invalid_argument("unknown record type '" + type + "'");
}

// Shortest representation that keeps 9 significant digits; avoids "-0".
std::string sig9(double v) {
  if (v == 0.0) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument("'" + where + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw std::invalid_argument("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

double record_time(const LogRecord& record) {
  return std::visit([](const auto& r) { return r.t; }, record);
}

std::vector<LogRecord> parse_log(std::istream& in) {
  std::vector<LogRecord> records;
  std::array<std::optional<double>, 3> last_time;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    LogRecord rec;
    try {
      rec = parse_record(json::parse(line));
    } catch (const std::exception& e) {
      throw ParseError(std::string("malformed log record: ") + e.what(), line_no);
    }
    auto& last = last_time[rec.index()];
    const double t = record_time(rec);
    if (last && t < *last) throw ParseError("timestamp goes backwards within its stream", line_no);
    last = t;
    records.push_back(std::move(rec));
  }
  std::stable_sort(records.begin(), records.end(), [](const LogRecord& a, const LogRecord& b) {
    const double ta = record_time(a), tb = record_time(b);
    if (ta != tb) return ta < tb;
    return stream_rank(a) < stream_rank(b);
  });
  return records;
}

std::vector<LogRecord> parse_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open log " + path.string());
  return parse_log(in);
}

std::string format_record(const LogRecord& record) {
  json j;
  if (const auto* s = std::get_if<ImuSample>(&record)) {
    j = {{"type", "imu"}, {"t", s->t}, {"w", to_json(s->gyro)}, {"a", to_json(s->accel)}};
  } else if (const auto* p = std::get_if<ContactPacket>(&record)) {
    json feet = json::array();
    for (const auto& m : p->feet) {
      feet.push_back({{"id", m.foot_id}, {"p", to_json(m.position)}, {"touchdown", m.touchdown}});
    }
    j = {{"type", "contact"}, {"t", p->t}, {"feet", feet}};
  } else {
    const auto& g = std::get<GroundTruthPose>(record);
    j = {{"type", "gt"}, {"t", g.t}, {"p", to_json(g.position)}, {"q", to_json(g.orientation)}};
  }
  return j.dump();
}

LogRecord apply_extrinsics(const LogRecord& record, const Extrinsic& ext) {
  if (const auto* s = std::get_if<ImuSample>(&record)) {
    ImuSample out = *s;
    out.gyro = ext.rotation * s->gyro;
    out.accel = ext.rotation * s->accel;
    return out;
  }
  if (const auto* p = std::get_if<ContactPacket>(&record)) {
    ContactPacket out = *p;
    for (auto& m : out.feet) m.position = ext.rotation * m.position + ext.translation;
    return out;
  }
  return record;
}

void write_trajectory(std::ostream& out, std::span<const StampedPose> poses) {
  std::vector<StampedPose> sorted(poses.begin(), poses.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const StampedPose& a, const StampedPose& b) { return a.t < b.t; });
  char tbuf[64];
  for (const auto& pose : sorted) {
    Eigen::Quaterniond q(pose.rotation);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    std::snprintf(tbuf, sizeof(tbuf), "%.9f", pose.t);
    out << tbuf << ' ' << sig9(pose.position.x()) << ' ' << sig9(pose.position.y()) << ' '
        << sig9(pose.position.z()) << ' ' << sig9(q.x()) << ' ' << sig9(q.y()) << ' '
        << sig9(q.z()) << ' ' << sig9(q.w()) << '\n';
  }
  if (!out) throw std::runtime_error("write_trajectory: write failed");
}

void write_trajectory(const std::filesystem::path& path, std::span<const StampedPose> poses) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trajectory: cannot open " + path.string());
  write_trajectory(out, poses);
}

std::vector<StampedPose> read_trajectory(std::istream& in) {
  std::vector<StampedPose> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double v[8];
    for (double& x : v) {
      if (!(ss >> x)) throw ParseError("trajectory line needs 8 numbers", line_no);
    }
    std::string extra;
    if (ss >> extra) throw ParseError("trajectory line has trailing fields", line_no);
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (std::abs(q.norm() - 1.0) > 1e-6) throw ParseError("non-unit quaternion", line_no);
    poses.push_back({v[0], q.normalized().toRotationMatrix(), Vector3(v[1], v[2], v[3])});
  }
  return poses;
}

std::vector<StampedPose> read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trajectory " + path.string());
  return read_trajectory(in);
}

EstimatorConfig parse_config(const std::string& text) {
  EstimatorConfig c;
  try {
    const json j = json::parse(text);
    check_keys(j,
               {"variant", "feet", "gravity", "max_update_interval", "lag", "height_prior",
                "terrain_height", "robust", "huber_threshold", "noise", "initial", "prior",
                "imu_bias", "lm", "extrinsic"},
               "config");
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    read(j, "feet", c.feet);
    if (j.contains("gravity")) c.gravity = vec3(j.at("gravity"), "gravity");
    read(j, "max_update_interval", c.max_update_interval);
    read(j, "lag", c.lag);
    read(j, "height_prior", c.height_prior);
    read(j, "terrain_height", c.terrain_height);
    read(j, "robust", c.robust);
    read(j, "huber_threshold", c.huber_threshold);
    if (j.contains("noise")) {
      const json& n = j.at("noise");
      check_keys(n,
                 {"gyro_noise_density", "accel_noise_density", "gyro_bias_rw_density",
                  "accel_bias_rw_density", "contact_sigma", "foothold_init_sigma", "height_sigma",
                  "foothold_slip_density"},
                 "noise");
      read(n, "gyro_noise_density", c.noise.gyro_noise_density);
      read(n, "accel_noise_density", c.noise.accel_noise_density);
      read(n, "gyro_bias_rw_density", c.noise.gyro_bias_rw_density);
      read(n, "accel_bias_rw_density", c.noise.accel_bias_rw_density);
      read(n, "contact_sigma", c.noise.contact_sigma);
      read(n, "foothold_init_sigma", c.noise.foothold_init_sigma);
      read(n, "height_sigma", c.noise.height_sigma);
      read(n, "foothold_slip_density", c.noise.foothold_slip_density);
    }
    if (j.contains("initial")) {
      const json& i = j.at("initial");
      check_keys(i, {"position", "velocity", "orientation"}, "initial");
      if (i.contains("position")) c.initial_position = vec3(i.at("position"), "position");
      if (i.contains("velocity")) c.initial_velocity = vec3(i.at("velocity"), "velocity");
      if (i.contains("orientation")) {
        c.initial_rotation = quat(i.at("orientation"), "orientation").toRotationMatrix();
      }
    }
    if (j.contains("prior")) {
      const json& p = j.at("prior");
      check_keys(p, {"roll", "pitch", "yaw", "position", "velocity", "gyro_bias", "accel_bias"},
                 "prior");
      read(p, "roll", c.prior.roll);
      read(p, "pitch", c.prior.pitch);
      read(p, "yaw", c.prior.yaw);
      read(p, "position", c.prior.position);
      read(p, "velocity", c.prior.velocity);
      read(p, "gyro_bias", c.prior.gyro_bias);
      read(p, "accel_bias", c.prior.accel_bias);
    }
    if (j.contains("imu_bias")) {
      const json& b = j.at("imu_bias");
      check_keys(b, {"gyro", "accel"}, "imu_bias");
      if (b.contains("gyro")) c.imu_bias.gyro = vec3(b.at("gyro"), "gyro");
      if (b.contains("accel")) c.imu_bias.accel = vec3(b.at("accel"), "accel");
    }
    if (j.contains("lm")) {
      const json& l = j.at("lm");
      check_keys(l,
                 {"lambda_initial", "lambda_factor", "max_iterations", "relative_tolerance",
                  "gauss_newton"},
                 "lm");
      read(l, "lambda_initial", c.lm.lambda_initial);
      read(l, "lambda_factor", c.lm.lambda_factor);
      read(l, "max_iterations", c.lm.max_iterations);
      read(l, "relative_tolerance", c.lm.relative_tolerance);
      read(l, "gauss_newton", c.lm.gauss_newton);
    }
    if (j.contains("extrinsic")) {
      const json& e = j.at("extrinsic");
      check_keys(e, {"orientation", "translation"}, "extrinsic");
      if (e.contains("orientation")) {
        c.extrinsic.rotation = quat(e.at("orientation"), "orientation").toRotationMatrix();
      }
      if (e.contains("translation")) c.extrinsic.translation = vec3(e.at("translation"), "translation");
    }
    c.validate();
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid config: ") + e.what());
  }
  return c;
}

EstimatorConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const EstimatorConfig& c) {
  const auto& n = c.noise;
  const json j = {
      {"variant", variant_name(c.variant)},
      {"feet", c.feet},
      {"gravity", to_json(c.gravity)},
      {"max_update_interval", c.max_update_interval},
      {"lag", c.lag},
      {"height_prior", c.height_prior},
      {"terrain_height", c.terrain_height},
      {"robust", c.robust},
      {"huber_threshold", c.huber_threshold},
      {"noise",
       {{"gyro_noise_density", n.gyro_noise_density},
        {"accel_noise_density", n.accel_noise_density},
        {"gyro_bias_rw_density", n.gyro_bias_rw_density},
        {"accel_bias_rw_density", n.accel_bias_rw_density},
        {"contact_sigma", n.contact_sigma},
        {"foothold_init_sigma", n.foothold_init_sigma},
        {"height_sigma", n.height_sigma},
        {"foothold_slip_density", n.foothold_slip_density}}},
      {"initial",
       {{"position", to_json(c.initial_position)},
        {"velocity", to_json(c.initial_velocity)},
        {"orientation", to_json(Eigen::Quaterniond(c.initial_rotation))}}},
      {"prior",
       {{"roll", c.prior.roll},
        {"pitch", c.prior.pitch},
        {"yaw", c.prior.yaw},
        {"position", c.prior.position},
        {"velocity", c.prior.velocity},
        {"gyro_bias", c.prior.gyro_bias},
        {"accel_bias", c.prior.accel_bias}}},
      {"imu_bias", {{"gyro", to_json(c.imu_bias.gyro)}, {"accel", to_json(c.imu_bias.accel)}}},
      {"lm",
       {{"lambda_initial", c.lm.lambda_initial},
        {"lambda_factor", c.lm.lambda_factor},
        {"max_iterations", c.lm.max_iterations},
        {"relative_tolerance", c.lm.relative_tolerance},
        {"gauss_newton", c.lm.gauss_newton}}},
      {"extrinsic",
       {{"orientation", to_json(Eigen::Quaterniond(c.extrinsic.rotation))},
        {"translation", to_json(c.extrinsic.translation)}}},
  };
  return j.dump(2) + "\n";
}

}  // namespace legged
