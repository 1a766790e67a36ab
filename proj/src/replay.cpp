#include "legged_odom/replay.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "legged_odom/errors.hpp"

namespace legged {

namespace {

StampedPose to_pose(const NavEstimate& e) { return {e.t, e.rotation(), e.position()}; }

std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_plot_data: cannot open " + path.string());
  out << header << '\n';
  return out;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v == 0.0 ? 0.0 : v);
  return buf;
}

}  // namespace

ReplayResult replay(std::span<const LogRecord> records, const EstimatorConfig& config,
                    const ReplayOptions& options) {
  const auto estimator = make_estimator(config);
  ReplayResult result;
  const double period = options.output_rate > 0.0 ? 1.0 / options.output_rate : 0.0;
  double origin = 0.0;
  long next_index = 1;
  bool have_output = false;

  auto emit = [&](const NavEstimate& e) {
    if (!result.trajectory.empty() && result.trajectory.back().t == e.t) {
      result.trajectory.back() = to_pose(e);
    } else {
      result.trajectory.push_back(to_pose(e));
    }
  };

  for (const LogRecord& raw : records) {
    if (std::holds_alternative<GroundTruthPose>(raw)) continue;
    const LogRecord rec = apply_extrinsics(raw, config.extrinsic);
    if (const auto* s = std::get_if<ImuSample>(&rec)) {
      estimator->process_imu(*s);
      if (have_output && period > 0.0 && s->t >= origin + next_index * period - 1e-9) {
        emit(estimator->current_estimate(s->t));
        next_index = static_cast<long>(std::floor((s->t - origin) / period + 1e-9)) + 1;
      }
    } else {
      const auto& p = std::get<ContactPacket>(rec);
      const bool was_initialized = estimator->initialized();
      if (estimator->process_contact(p)) {
        emit(estimator->current_estimate(p.t));
        if (!was_initialized) {
          result.initialization_time = p.t;
          origin = p.t;
          have_output = true;
        }
      }
    }
  }
  if (!estimator->initialized()) {
    throw InputError("replay: estimator never initialized (no packet with every foot in stance)");
  }
  result.scheduled_updates = estimator->scheduled_update_count();
  return result;
}

std::vector<StampedPose> ground_truth_of(std::span<const LogRecord> records) {
  std::vector<StampedPose> gt;
  for (const auto& r : records) {
    if (const auto* g = std::get_if<GroundTruthPose>(&r)) {
      gt.push_back({g->t, g->orientation.toRotationMatrix(), g->position});
    }
  }
  return gt;
}

void emit_plot_data(const std::map<std::string, std::vector<StampedPose>>& trajectories,
                    const std::vector<StampedPose>& ground_truth,
                    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& [name, traj] : trajectories) {
    auto xy = open_csv(out_dir / (name + "_xy.csv"), "x,y");
    auto z = open_csv(out_dir / (name + "_z.csv"), "t,z");
    auto err = open_csv(out_dir / (name + "_error.csv"), "t,ex,ey,ez");
    for (const auto& p : traj) {
      xy << num(p.position.x()) << ',' << num(p.position.y()) << '\n';
      z << num(p.t) << ',' << num(p.position.z()) << '\n';
    }
    const auto pairs = associate(traj, ground_truth);
    if (pairs.size() >= 2) {
      std::vector<Vector3> pe, pg;
      for (const auto& [i, j] : pairs) {
        pe.push_back(traj[i].position);
        pg.push_back(ground_truth[j].position);
      }
      const RigidTransform T = align_rigid(pe, pg);
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const Vector3 d = T.rotation * pe[k] + T.translation - pg[k];
        err << num(traj[pairs[k].first].t) << ',' << num(d.x()) << ',' << num(d.y()) << ','
            << num(d.z()) << '\n';
      }
    }
    if (!xy || !z || !err) throw std::runtime_error("emit_plot_data: write failed");
  }
}

}  // namespace legged
