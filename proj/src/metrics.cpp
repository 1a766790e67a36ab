#include "legged_odom/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>
#include <json.hpp>

#include "legged_odom/errors.hpp"

namespace legged {

namespace {

constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

// Geodesic angle; atan2 keeps precision near 0 and pi where acos does not.
double angle_between(const Matrix3& a, const Matrix3& b) {
  const Matrix3 m = a.transpose() * b;
  const Vector3 s(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
  return std::atan2(0.5 * s.norm(), 0.5 * (m.trace() - 1.0));
}

// Nearest index in a time-sorted pose list.
std::size_t nearest(std::span<const StampedPose> poses, double t) {
  const auto it = std::lower_bound(poses.begin(), poses.end(), t,
                                   [](const StampedPose& p, double v) { return p.t < v; });
  std::size_t j = static_cast<std::size_t>(it - poses.begin());
  if (j == poses.size()) return j - 1;
  if (j > 0 && t - poses[j - 1].t <= poses[j].t - t) return j - 1;
  return j;
}

double rms(double sum_sq, std::size_t n) { return n ? std::sqrt(sum_sq / n) : 0.0; }

}  // namespace

RigidTransform align_rigid(std::span<const Vector3> est, std::span<const Vector3> gt) {
  if (est.size() != gt.size() || est.empty()) {
    throw InputError("align_rigid: need equally many (>0) points");
  }
  Vector3 me = Vector3::Zero(), mg = Vector3::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    me += est[i];
    mg += gt[i];
  }
  me /= static_cast<double>(est.size());
  mg /= static_cast<double>(est.size());
  Matrix3 S = Matrix3::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) S += (gt[i] - mg) * (est[i] - me).transpose();
  Eigen::JacobiSVD<Matrix3> svd(S, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 D = Matrix3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) D(2, 2) = -1.0;
  RigidTransform T;
  T.rotation = svd.matrixU() * D * svd.matrixV().transpose();
  T.translation = mg - T.rotation * me;
  return T;
}

std::vector<std::pair<std::size_t, std::size_t>> associate(std::span<const StampedPose> est,
                                                           std::span<const StampedPose> gt,
                                                           double max_dt) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (gt.empty()) return pairs;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const std::size_t j = nearest(gt, est[i].t);
    if (std::abs(gt[j].t - est[i].t) <= max_dt + 1e-12) pairs.emplace_back(i, j);
  }
  return pairs;
}

MetricsReport evaluate(std::span<const StampedPose> est_in, std::span<const StampedPose> gt_in,
                       double rpe_delta, double max_dt) {
  auto by_time = [](const StampedPose& a, const StampedPose& b) { return a.t < b.t; };
  std::vector<StampedPose> est(est_in.begin(), est_in.end());
  std::vector<StampedPose> gt(gt_in.begin(), gt_in.end());
  std::stable_sort(est.begin(), est.end(), by_time);
  std::stable_sort(gt.begin(), gt.end(), by_time);

  const auto pairs = associate(est, gt, max_dt);
  if (pairs.size() < 2) {
    throw InputError("evaluate: fewer than two associated pose pairs (" +
                     std::to_string(pairs.size()) + ")");
  }
  std::vector<StampedPose> e, g;
  std::vector<Vector3> pe, pg;
  for (const auto& [i, j] : pairs) {
    e.push_back(est[i]);
    g.push_back(gt[j]);
    pe.push_back(est[i].position);
    pg.push_back(gt[j].position);
  }
  const RigidTransform T = align_rigid(pe, pg);

  MetricsReport r;
  r.pose_count = pairs.size();
  r.rpe_delta = rpe_delta;
  double st = 0.0, sr = 0.0, sz = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    const Vector3 d = T.rotation * e[k].position + T.translation - g[k].position;
    st += d.squaredNorm();
    sz += d.z() * d.z();
    const double a = angle_between(g[k].rotation, T.rotation * e[k].rotation);
    sr += a * a;
  }
  r.ape_t = rms(st, e.size());
  r.ape_z = rms(sz, e.size());
  r.ape_r = rms(sr, e.size()) * kRadToDeg;

  double rt = 0.0, rr = 0.0;
  for (std::size_t a = 0; a < e.size(); ++a) {
    const std::size_t b = nearest(e, e[a].t + rpe_delta);
    if (b <= a || std::abs(e[b].t - e[a].t - rpe_delta) > max_dt + 1e-12) continue;
    // Relative motions a -> b in each trajectory, compared in a's body frame.
    const Matrix3 dRe = e[a].rotation.transpose() * e[b].rotation;
    const Vector3 dpe = e[a].rotation.transpose() * (e[b].position - e[a].position);
    const Matrix3 dRg = g[a].rotation.transpose() * g[b].rotation;
    const Vector3 dpg = g[a].rotation.transpose() * (g[b].position - g[a].position);
    const Vector3 err_t = dRg.transpose() * (dpe - dpg);
    rt += err_t.squaredNorm();
    const double ang = angle_between(dRg, dRe);
    rr += ang * ang;
    ++r.rpe_pairs;
  }
  r.rpe_t = rms(rt, r.rpe_pairs);
  r.rpe_r = rms(rr, r.rpe_pairs) * kRadToDeg;
  return r;
}

std::string format_report(const MetricsReport& r) {
  const nlohmann::ordered_json j = {
      {"name", r.name},
      {"pose_count", r.pose_count},
      {"ape_t_rmse_m", r.ape_t},
      {"ape_r_rmse_deg", r.ape_r},
      {"rpe_t_rmse_m", r.rpe_t},
      {"rpe_r_rmse_deg", r.rpe_r},
      {"ape_z_rmse_m", r.ape_z},
      {"rpe_delta_s", r.rpe_delta},
      {"rpe_pairs", r.rpe_pairs},
      {"conventions",
       "APE after a single SE(3) alignment without scale; RPE over pose pairs separated by "
       "rpe_delta_s, unaligned; association by nearest timestamp within 10 ms"},
  };
  return j.dump(2) + "\n";
}

}  // namespace legged
