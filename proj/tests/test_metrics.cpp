#include <gtest/gtest.h>

#include <Eigen/LU>
#include <cmath>

#include "legged_odom/errors.hpp"
#include "legged_odom/liegroup.hpp"
#include "legged_odom/metrics.hpp"
#include "support.hpp"

namespace legged {
namespace {

using testing::Gen;

std::vector<StampedPose> random_walk(Gen& g, int n, double dt = 0.01) {
  std::vector<StampedPose> out;
  Matrix3 R = Matrix3::Identity();
  Vector3 p = Vector3::Zero();
  for (int i = 0; i < n; ++i) {
    out.push_back({i * dt, R, p});
    R = R * so3::exp(g.vec3(0.02));
    p += R * Vector3(0.01, 0, 0) + g.vec3(0.002);
  }
  return out;
}

// Independent alignment for planar (yaw + translation) misalignments: grid
// search over yaw, then ternary search around the best cell.
double planar_ape_oracle(const std::vector<Vector3>& est, const std::vector<Vector3>& gt) {
  const auto n = static_cast<double>(est.size());
  Vector3 me = Vector3::Zero(), mg = Vector3::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    me += est[i] / n;
    mg += gt[i] / n;
  }
  // A half turn about x is a proper rotation that mirrors the plane.
  auto cost = [&](double yaw, bool flip) {
    Matrix3 R = so3::exp(Vector3(0, 0, yaw));
    if (flip) R = R * so3::exp(Vector3(M_PI, 0, 0));
    double s = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
      s += (R * (est[i] - me) - (gt[i] - mg)).squaredNorm();
    }
    return s;
  };
  double result = INFINITY;
  for (bool flip : {false, true}) {
    double best = 0.0, best_cost = cost(0.0, flip);
    for (int k = -3600; k <= 3600; ++k) {
      const double yaw = k * M_PI / 3600.0;
      const double c = cost(yaw, flip);
      if (c < best_cost) {
        best_cost = c;
        best = yaw;
      }
    }
    double lo = best - M_PI / 3600.0, hi = best + M_PI / 3600.0;
    for (int it = 0; it < 200; ++it) {
      const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
      if (cost(a, flip) < cost(b, flip)) {
        hi = b;
      } else {
        lo = a;
      }
    }
    result = std::min(result, std::sqrt(cost(0.5 * (lo + hi), flip) / n));
  }
  return result;
}

TEST(Evaluate, IdenticalTrajectoriesGiveZero) {
  Gen g(1);
  const auto traj = random_walk(g, 500);
  const MetricsReport r = evaluate(traj, traj);
  EXPECT_EQ(r.pose_count, 500u);
  EXPECT_LT(r.ape_t, 1e-12);
  EXPECT_LT(r.ape_r, 1e-6);
  EXPECT_LT(r.rpe_t, 1e-12);
  EXPECT_LT(r.rpe_r, 1e-6);
  EXPECT_LT(r.ape_z, 1e-12);
  EXPECT_GT(r.rpe_pairs, 300u);
}

TEST(Evaluate, RigidTransformIsInvisible) {
  Gen g(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto gt = random_walk(g, 300);
    const Matrix3 R = g.rotation();
    const Vector3 t = g.vec3(10.0);
    std::vector<StampedPose> est;
    for (const auto& p : gt) est.push_back({p.t, R * p.rotation, R * p.position + t});
    const MetricsReport r = evaluate(est, gt);
    EXPECT_LT(r.ape_t, 1e-10);
    EXPECT_LT(r.ape_r, 1e-6);
    EXPECT_LT(r.rpe_t, 1e-10);
    EXPECT_LT(r.rpe_r, 1e-6);
    EXPECT_LT(r.ape_z, 1e-10);
  }
}

TEST(Evaluate, VerticalDriftMatchesDirectComputation) {
  // Static truth, estimate climbing at 0.1 m/s for 10 s. Alignment can only
  // remove the mean (the ramp has no rotational component to exploit), so the
  // aligned error is the centered ramp.
  std::vector<StampedPose> gt, est;
  const int n = 1001;
  for (int i = 0; i < n; ++i) {
    const double t = 0.01 * i;
    gt.push_back({t, Matrix3::Identity(), Vector3::Zero()});
    est.push_back({t, Matrix3::Identity(), Vector3(0, 0, 0.1 * t)});
  }
  double mean = 0.0;
  for (const auto& p : est) mean += p.position.z() / n;
  double ss = 0.0;
  for (const auto& p : est) ss += std::pow(p.position.z() - mean, 2);
  const double oracle = std::sqrt(ss / n);
  const MetricsReport r = evaluate(est, gt);
  EXPECT_NEAR(r.ape_z, oracle, 1e-10);
  EXPECT_NEAR(r.ape_t, oracle, 1e-10);
  // 0.1 m per 1 s pair; partners near the end may sit up to 10 ms short.
  EXPECT_NEAR(r.rpe_t, 0.1, 1e-3);
  EXPECT_LE(r.rpe_t, 0.1 + 1e-12);
}

TEST(Evaluate, PlanarMisalignmentAgainstSearchOracle) {
  Gen g(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto gt = random_walk(g, 200);
    const Matrix3 R = so3::exp(Vector3(0, 0, g.uniform(-3.0, 3.0)));
    const Vector3 t(g.uniform(-5, 5), g.uniform(-5, 5), 0.0);
    std::vector<StampedPose> est;
    std::vector<Vector3> pe, pg;
    for (const auto& p : gt) {
      Vector3 noisy = p.position + Vector3(0.05 * g.normal(), 0.05 * g.normal(), 0.0);
      est.push_back({p.t, R * p.rotation, R * noisy + t});
      pe.push_back(est.back().position);
      pg.push_back(p.position);
    }
    // Keep the estimate planar so the best rotation is a yaw.
    for (auto& q : pe) q.z() = 0.0;
    for (auto& q : pg) q.z() = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) est[i].position.z() = 0.0;
    std::vector<StampedPose> gt_flat = gt;
    for (auto& q : gt_flat) q.position.z() = 0.0;
    const MetricsReport r = evaluate(est, gt_flat);
    EXPECT_NEAR(r.ape_t, planar_ape_oracle(pe, pg), 1e-7);
  }
}

TEST(AlignRigid, RecoversTransform) {
  Gen g(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector3> est, gt;
    const Matrix3 R = g.rotation();
    const Vector3 t = g.vec3(3.0);
    for (int i = 0; i < 30; ++i) {
      est.push_back(g.vec3(2.0));
      gt.push_back(R * est.back() + t);
    }
    const RigidTransform T = align_rigid(est, gt);
    EXPECT_LT((T.rotation - R).norm(), 1e-10);
    EXPECT_LT((T.translation - t).norm(), 1e-10);
    EXPECT_NEAR(T.rotation.determinant(), 1.0, 1e-12);
  }
}

TEST(Associate, NearestWithinTolerance) {
  std::vector<StampedPose> est, gt;
  for (int i = 0; i < 10; ++i) est.push_back({0.1 * i, Matrix3::Identity(), Vector3::Zero()});
  for (int i = 0; i < 100; ++i) gt.push_back({0.0103 * i, Matrix3::Identity(), Vector3::Zero()});
  const auto pairs = associate(est, gt, 0.01);
  ASSERT_EQ(pairs.size(), 10u);
  for (const auto& [e, g] : pairs) {
    EXPECT_LE(std::abs(est[e].t - gt[g].t), 0.01);
    for (std::size_t k = 0; k < gt.size(); ++k) {
      EXPECT_GE(std::abs(est[e].t - gt[k].t), std::abs(est[e].t - gt[g].t));
    }
  }
  const std::vector<StampedPose> far{{5.0, Matrix3::Identity(), Vector3::Zero()}};
  EXPECT_TRUE(associate(far, gt, 0.01).empty());
}

TEST(Evaluate, TooFewAssociationsThrow) {
  const std::vector<StampedPose> one{{0.0, Matrix3::Identity(), Vector3::Zero()}};
  EXPECT_THROW(evaluate(one, one), InputError);
  const std::vector<StampedPose> late{{100.0, Matrix3::Identity(), Vector3::Zero()},
                                      {101.0, Matrix3::Identity(), Vector3::Zero()}};
  const std::vector<StampedPose> early{{0.0, Matrix3::Identity(), Vector3::Zero()},
                                       {1.0, Matrix3::Identity(), Vector3::Zero()}};
  EXPECT_THROW(evaluate(late, early), InputError);
}

TEST(Evaluate, MetricsAreNonNegative) {
  Gen g(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_walk(g, 150);
    const auto b = random_walk(g, 150);
    const MetricsReport r = evaluate(a, b, 0.5);
    for (double v : {r.ape_t, r.ape_r, r.rpe_t, r.rpe_r, r.ape_z}) {
      EXPECT_GE(v, 0.0);
      EXPECT_TRUE(std::isfinite(v));
    }
    EXPECT_LE(r.ape_z, r.ape_t + 1e-15);
  }
}

}  // namespace
}  // namespace legged
