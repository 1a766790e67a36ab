#include "legged_odom/preintegration.hpp"

#include "legged_odom/errors.hpp"

namespace legged {

PreintegratedImu::PreintegratedImu(const ImuBias& linearization_bias, const NoiseConfig& noise)
    : noise_(noise), bias_hat_(linearization_bias) {}

void PreintegratedImu::reset(const ImuBias& linearization_bias) {
  *this = PreintegratedImu(linearization_bias, noise_);
}

void PreintegratedImu::integrate(const Vector3& gyro, const Vector3& accel, double dt) {
  if (!(dt > 0.0)) throw InputError("PreintegratedImu::integrate: dt must be positive");
  const Vector3 omega = gyro - bias_hat_.gyro;
  const Vector3 a = accel - bias_hat_.accel;
  const Vector3 theta = omega * dt;
  const Matrix3 Omega = so3::exp(theta);
  const Matrix3 Jl = so3::left_jacobian(theta);
  const Matrix3 Jr = so3::right_jacobian(theta);
  const Matrix3 G = so3::gamma_left(theta);
  const Matrix3& R = delta_rotation_;
  const Vector3 dv_step = Jl * a * dt;
  const Vector3 dp_step = G * a * dt * dt;
  const Matrix3 I = Matrix3::Identity();

  // Error propagation, tangent order [phi, p, v].
  Matrix9 F = Matrix9::Identity();
  F.block<3, 3>(0, 0) = Omega.transpose();
  F.block<3, 3>(3, 0) = -R * hat(dp_step);
  F.block<3, 3>(3, 6) = dt * I;
  F.block<3, 3>(6, 0) = -R * hat(dv_step);
  const double sg2 = noise_.gyro_noise_density * noise_.gyro_noise_density;
  const double sa2 = noise_.accel_noise_density * noise_.accel_noise_density;
  Matrix9 Qd = Matrix9::Zero();
  Qd.block<3, 3>(0, 0) = sg2 * dt * Jr * Jr.transpose();
  Qd.block<3, 3>(3, 3) = sa2 * dt * dt * dt / 3.0 * I;
  Qd.block<3, 3>(3, 6) = sa2 * dt * dt / 2.0 * I;
  Qd.block<3, 3>(6, 3) = sa2 * dt * dt / 2.0 * I;
  Qd.block<3, 3>(6, 6) = sa2 * dt * I;
  covariance_ = F * covariance_ * F.transpose() + Qd;
  covariance_ = 0.5 * (covariance_ + covariance_.transpose()).eval();

  // Bias Jacobians; the kernels' own dependence on theta is kept to first order.
  const Matrix3 ha = hat(a);
  dp_dbg_ += dv_dbg_ * dt - R * hat(dp_step) * dR_dbg_ + R * ha * (dt * dt * dt / 6.0);
  dp_dba_ += dv_dba_ * dt - R * G * dt * dt;
  dv_dbg_ += -R * hat(dv_step) * dR_dbg_ + R * ha * (0.5 * dt * dt);
  dv_dba_ += -R * Jl * dt;
  dR_dbg_ = Omega.transpose() * dR_dbg_ - Jr * dt;

  delta_position_ += delta_velocity_ * dt + R * dp_step;
  delta_velocity_ += R * dv_step;
  delta_rotation_ = so3::renormalize(R * Omega);
  delta_time_ += dt;
}

ImuIncrement PreintegratedImu::bias_correct(const ImuBias& bias) const {
  const Vector3 dbg = bias.gyro - bias_hat_.gyro;
  const Vector3 dba = bias.accel - bias_hat_.accel;
  ImuIncrement out;
  out.rotation = delta_rotation_ * so3::exp(dR_dbg_ * dbg);
  out.position = delta_position_ + dp_dbg_ * dbg + dp_dba_ * dba;
  out.velocity = delta_velocity_ + dv_dbg_ * dbg + dv_dba_ * dba;
  return out;
}

SEK3 PreintegratedImu::predict(const SEK3& nav_i, const ImuBias& bias,
                               const Vector3& gravity) const {
  if (nav_i.num_columns() != 2) throw DimensionError("PreintegratedImu::predict: K must be 2");
  const ImuIncrement inc = bias_correct(bias);
  const double dt = delta_time_;
  const Matrix3& Ri = nav_i.rotation();
  const Vector3 p = nav_i.column(0);
  const Vector3 v = nav_i.column(1);
  Eigen::Matrix3Xd cols(3, 2);
  cols.col(0) = p + v * dt + 0.5 * gravity * dt * dt + Ri * inc.position;
  cols.col(1) = v + gravity * dt + Ri * inc.velocity;
  return SEK3(so3::renormalize(Ri * inc.rotation), cols);
}

Vector9 PreintegratedImu::residual(const SEK3& nav_i, const SEK3& nav_j, const ImuBias& bias,
                                   const Vector3& gravity, Matrix* H_i, Matrix* H_j,
                                   Matrix* H_bias) const {
  if (nav_i.num_columns() != 2 || nav_j.num_columns() != 2) {
    throw DimensionError("PreintegratedImu::residual: nav-states must have K=2");
  }
  const double dt = delta_time_;
  const Vector3 dbg = bias.gyro - bias_hat_.gyro;
  const ImuIncrement inc = bias_correct(bias);
  const Matrix3& Ri = nav_i.rotation();
  const Matrix3& Rj = nav_j.rotation();
  const Vector3 pi = nav_i.column(0), vi = nav_i.column(1);
  const Vector3 pj = nav_j.column(0), vj = nav_j.column(1);
  const Matrix3 RiT = Ri.transpose();

  const Vector3 pos_body = RiT * (pj - pi - vi * dt - 0.5 * gravity * dt * dt);
  const Vector3 vel_body = RiT * (vj - vi - gravity * dt);
  const Vector3 rR = so3::log(inc.rotation.transpose() * RiT * Rj);

  Vector9 r;
  r << rR, pos_body - inc.position, vel_body - inc.velocity;

  const Matrix3 I = Matrix3::Identity();
  const Matrix3 JrInv = so3::right_jacobian_inverse(rR);
  if (H_i) {
    H_i->setZero(9, 9);
    H_i->block<3, 3>(0, 0) = -JrInv * Rj.transpose() * Ri;
    H_i->block<3, 3>(3, 0) = hat(pos_body);
    H_i->block<3, 3>(3, 3) = -I;
    H_i->block<3, 3>(3, 6) = -I * dt;
    H_i->block<3, 3>(6, 0) = hat(vel_body);
    H_i->block<3, 3>(6, 6) = -I;
  }
  if (H_j) {
    const Matrix3 RiTRj = RiT * Rj;
    H_j->setZero(9, 9);
    H_j->block<3, 3>(0, 0) = JrInv;
    H_j->block<3, 3>(3, 3) = RiTRj;
    H_j->block<3, 3>(6, 6) = RiTRj;
  }
  if (H_bias) {
    const Vector3 c = dR_dbg_ * dbg;
    H_bias->setZero(9, 6);
    H_bias->block<3, 3>(0, 0) =
        -JrInv * so3::exp(rR).transpose() * so3::right_jacobian(c) * dR_dbg_;
    H_bias->block<3, 3>(3, 0) = -dp_dbg_;
    H_bias->block<3, 3>(3, 3) = -dp_dba_;
    H_bias->block<3, 3>(6, 0) = -dv_dbg_;
    H_bias->block<3, 3>(6, 3) = -dv_dba_;
  }
  return r;
}

PreintegratedImu preintegrate(std::span<const ImuSample> samples, double end_time,
                              const ImuBias& bias, const NoiseConfig& noise) {
  if (samples.empty()) throw InputError("preintegrate: empty sample list");
  PreintegratedImu pim(bias, noise);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double t_next = (k + 1 < samples.size()) ? samples[k + 1].t : end_time;
    if (!(t_next > samples[k].t)) {
      throw InputError("preintegrate: timestamps must be strictly increasing");
    }
    pim.integrate(samples[k].gyro, samples[k].accel, t_next - samples[k].t);
  }
  return pim;
}

}  // namespace legged
