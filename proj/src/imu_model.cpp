#include "legged_odom/imu_model.hpp"

#include <string>

#include "legged_odom/errors.hpp"

namespace legged {

namespace {

void check_slots(int num_columns, NavSlots slots) {
  if (slots.position < 0 || slots.position >= num_columns || slots.velocity < 0 ||
      slots.velocity >= num_columns || slots.position == slots.velocity) {
    throw DimensionError("navigation slots (" + std::to_string(slots.position) + ", " +
                         std::to_string(slots.velocity) + ") invalid for K=" +
                         std::to_string(num_columns));
  }
}

bool is_foothold(int column, NavSlots slots) {
  return column != slots.position && column != slots.velocity;
}

}  // namespace

Eigen::Matrix<double, 6, 1> ImuBias::vector() const {
  Eigen::Matrix<double, 6, 1> v;
  v << gyro, accel;
  return v;
}

ImuBias ImuBias::from_vector(const Eigen::Ref<const Vector>& v) {
  if (v.size() != 6) throw DimensionError("ImuBias::from_vector: expected 6 entries");
  return ImuBias{v.head<3>(), v.tail<3>()};
}

void NoiseConfig::validate() const {
  const double values[] = {gyro_noise_density,  accel_noise_density, gyro_bias_rw_density,
                           accel_bias_rw_density, contact_sigma,     foothold_init_sigma,
                           height_sigma,          foothold_slip_density};
  for (double v : values) {
    if (!(v > 0.0)) throw InputError("NoiseConfig: all densities and sigmas must be positive");
  }
}

SEK3 gravity_factor(const Vector3& gravity, double dt, int num_columns, NavSlots slots) {
  check_slots(num_columns, slots);
  SEK3 W(num_columns);
  W.set_column(slots.position, 0.5 * gravity * dt * dt);
  W.set_column(slots.velocity, gravity * dt);
  return W;
}

SEK3 autonomous_flow(const SEK3& X, double dt, NavSlots slots) {
  check_slots(X.num_columns(), slots);
  SEK3 out = X;
  out.set_column(slots.position, X.column(slots.position) + X.column(slots.velocity) * dt);
  return out;
}

Matrix flow_differential(double dt, int num_columns, NavSlots slots) {
  check_slots(num_columns, slots);
  const int n = 3 * (num_columns + 1);
  Matrix Phi = Matrix::Identity(n, n);
  Phi.block<3, 3>(3 * (slots.position + 1), 3 * (slots.velocity + 1)) =
      dt * Matrix3::Identity();
  return Phi;
}

SEK3 imu_increment(const ImuSample& sample, const ImuBias& bias, double dt, int num_columns,
                   NavSlots slots) {
  check_slots(num_columns, slots);
  const Vector3 omega = sample.gyro - bias.gyro;
  const Vector3 accel = sample.accel - bias.accel;
  const Vector3 theta = omega * dt;
  SEK3 U(num_columns);
  U.set_rotation(so3::exp(theta));
  U.set_column(slots.position, so3::gamma_left(theta) * accel * dt * dt);
  U.set_column(slots.velocity, so3::left_jacobian(theta) * accel * dt);
  return U;
}

Prediction predict(const SEK3& X, const ImuSample& sample, const ImuBias& bias,
                   const Vector3& gravity, double dt, NavSlots slots) {
  const int K = X.num_columns();
  const SEK3 W = gravity_factor(gravity, dt, K, slots);
  const SEK3 U = imu_increment(sample, bias, dt, K, slots);
  Prediction out;
  out.state = W.compose(autonomous_flow(X, dt, slots)).compose(U);
  out.jacobian = U.inverse().adjoint() * flow_differential(dt, K, slots);
  // Stationary footholds: the body-frame chart rotates with the nominal body.
  const Matrix3 OmegaT = U.rotation().transpose();
  for (int c = 0; c < K; ++c) {
    if (!is_foothold(c, slots)) continue;
    const int r = 3 * (c + 1);
    out.jacobian.block(r, 0, 3, out.jacobian.cols()).setZero();
    out.jacobian.block<3, 3>(r, r) = OmegaT;
  }
  return out;
}

Matrix process_noise(const NoiseConfig& noise, double dt, int num_columns, NavSlots slots) {
  check_slots(num_columns, slots);
  const int n = 3 * (num_columns + 1);
  Matrix Q = Matrix::Zero(n, n);
  const Matrix3 I = Matrix3::Identity();
  const double sg2 = noise.gyro_noise_density * noise.gyro_noise_density;
  const double sa2 = noise.accel_noise_density * noise.accel_noise_density;
  const double sf2 = noise.foothold_slip_density * noise.foothold_slip_density;
  const int p = 3 * (slots.position + 1);
  const int v = 3 * (slots.velocity + 1);
  Q.block<3, 3>(0, 0) = sg2 * dt * I;
  // White acceleration integrated once (velocity) and twice (position).
  Q.block<3, 3>(p, p) = sa2 * dt * dt * dt / 3.0 * I;
  Q.block<3, 3>(p, v) = sa2 * dt * dt / 2.0 * I;
  Q.block<3, 3>(v, p) = sa2 * dt * dt / 2.0 * I;
  Q.block<3, 3>(v, v) = sa2 * dt * I;
  for (int c = 0; c < num_columns; ++c) {
    if (is_foothold(c, slots)) Q.block<3, 3>(3 * (c + 1), 3 * (c + 1)) = sf2 * dt * I;
  }
  return Q;
}

}  // namespace legged
