#include "legged_odom/factors.hpp"

#include "legged_odom/errors.hpp"

namespace legged {

namespace {

void check_foot_column(const SEK3& X, int column, NavSlots slots) {
  if (column < 0 || column >= X.num_columns() || column == slots.position ||
      column == slots.velocity) {
    throw DimensionError("foot column " + std::to_string(column) + " is not a foothold slot");
  }
}

Matrix nav_contact_jacobian(const Vector3& predicted, int state_dim, int foot_column,
                            NavSlots slots) {
  Matrix H = Matrix::Zero(3, state_dim);
  H.block<3, 3>(0, 0) = hat(predicted);
  H.block<3, 3>(0, 3 * (slots.position + 1)) = -Matrix3::Identity();
  if (foot_column >= 0) H.block<3, 3>(0, 3 * (foot_column + 1)) = Matrix3::Identity();
  return H;
}

ImuBias bias_at(const Values& values, const Key& k) {
  return ImuBias::from_vector(values.vector(k));
}

}  // namespace

FilterMeasurement contact_residual_filter(const SEK3& X, int foot_column,
                                          const Vector3& measured, NavSlots slots) {
  check_foot_column(X, foot_column, slots);
  const Vector3 predicted =
      X.rotation().transpose() * (X.column(foot_column) - X.column(slots.position));
  return {measured - predicted, nav_contact_jacobian(predicted, X.dim(), foot_column, slots)};
}

FilterMeasurement height_residual_filter(const SEK3& X, int foot_column, double height) {
  check_foot_column(X, foot_column, {});
  Matrix H = Matrix::Zero(1, X.dim());
  H.block<1, 3>(0, 3 * (foot_column + 1)) = X.rotation().row(2);
  Vector r(1);
  r(0) = height - X.column(foot_column).z();
  return {r, H};
}

FilterContactFactor::FilterContactFactor(Key state, int foot_column, Vector3 measured,
                                         NoiseModel noise, NavSlots slots)
    : Factor({state}, std::move(noise)),
      column_(foot_column),
      measured_(std::move(measured)),
      slots_(slots) {}

Vector FilterContactFactor::evaluate(const Values& values, std::vector<Matrix>* H) const {
  const FilterMeasurement m =
      contact_residual_filter(values.group(keys()[0]), column_, measured_, slots_);
  if (H) *H = {m.H};
  return -m.residual;
}

FilterHeightFactor::FilterHeightFactor(Key state, int foot_column, double height, double sigma)
    : Factor({state}, NoiseModel::isotropic(1, sigma)), column_(foot_column), height_(height) {}

Vector FilterHeightFactor::evaluate(const Values& values, std::vector<Matrix>* H) const {
  const FilterMeasurement m = height_residual_filter(values.group(keys()[0]), column_, height_);
  if (H) *H = {m.H};
  return -m.residual;
}

LandmarkContactFactor::LandmarkContactFactor(Key nav, Key landmark, Vector3 measured,
                                             NoiseModel noise)
    : Factor({nav, landmark}, std::move(noise)), measured_(std::move(measured)) {}

Vector LandmarkContactFactor::evaluate(const Values& values, std::vector<Matrix>* H) const {
  const SEK3& nav = values.group(keys()[0]);
  const Vector& l = values.vector(keys()[1]);
  if (l.size() != 3) throw DimensionError("LandmarkContactFactor: landmark must be 3D");
  const Matrix3 Rt = nav.rotation().transpose();
  const Vector3 predicted = Rt * (l - nav.column(0));
  if (H) *H = {nav_contact_jacobian(predicted, nav.dim(), -1, {}), Matrix(Rt)};
  return predicted - measured_;
}

LandmarkHeightFactor::LandmarkHeightFactor(Key landmark, double height, double sigma)
    : Factor({landmark}, NoiseModel::isotropic(1, sigma)), height_(height) {}

Vector LandmarkHeightFactor::evaluate(const Values& values, std::vector<Matrix>* H) const {
  const Vector& l = values.vector(keys()[0]);
  if (H) {
    Matrix row = Matrix::Zero(1, 3);
    row(0, 2) = 1.0;
    *H = {row};
  }
  Vector r(1);
  r(0) = l.z() - height_;
  return r;
}

FactorPtr contact_factor_landmark(Key nav, Key landmark, const Vector3& measured, double sigma,
                                  bool robust, double huber_threshold) {
  NoiseModel noise = NoiseModel::isotropic(3, sigma);
  if (robust) noise = noise.with_huber(huber_threshold);
  return std::make_shared<LandmarkContactFactor>(nav, landmark, measured, std::move(noise));
}

ImuFactor::ImuFactor(Key nav_i, Key nav_j, Key bias, PreintegratedImu pim, Vector3 gravity)
    : Factor({nav_i, nav_j, bias}, NoiseModel::from_covariance(pim.covariance())),
      pim_(std::move(pim)),
      gravity_(std::move(gravity)) {
  if (!(pim_.delta_time() > 0.0)) throw InputError("ImuFactor: preintegration interval is empty");
}

Vector ImuFactor::evaluate(const Values& values, std::vector<Matrix>* H) const {
  const SEK3& xi = values.group(keys()[0]);
  const SEK3& xj = values.group(keys()[1]);
  const ImuBias b = bias_at(values, keys()[2]);
  if (!H) return pim_.residual(xi, xj, b, gravity_);
  H->assign(3, Matrix());
  return pim_.residual(xi, xj, b, gravity_, &(*H)[0], &(*H)[1], &(*H)[2]);
}

CombinedImuFactor::CombinedImuFactor(Key nav_i, Key nav_j, Key bias_i, Key bias_j,
                                     PreintegratedImu pim, Vector3 gravity)
    : Factor({nav_i, nav_j, bias_i, bias_j}, NoiseModel::from_covariance(covariance(pim))),
      pim_(std::move(pim)),
      gravity_(std::move(gravity)) {
  if (!(pim_.delta_time() > 0.0)) {
    throw InputError("CombinedImuFactor: preintegration interval is empty");
  }
}

Matrix CombinedImuFactor::covariance(const PreintegratedImu& pim) {
  Matrix cov = Matrix::Zero(15, 15);
  cov.topLeftCorner<9, 9>() = pim.covariance();
  const double dt = pim.delta_time();
  const double sg = pim.noise().gyro_bias_rw_density;
  const double sa = pim.noise().accel_bias_rw_density;
  cov.block<3, 3>(9, 9) = dt * sg * sg * Matrix3::Identity();
  cov.block<3, 3>(12, 12) = dt * sa * sa * Matrix3::Identity();
  return cov;
}

Vector CombinedImuFactor::evaluate(const Values& values, std::vector<Matrix>* H) const {
  const SEK3& xi = values.group(keys()[0]);
  const SEK3& xj = values.group(keys()[1]);
  const Vector& bi = values.vector(keys()[2]);
  const Vector& bj = values.vector(keys()[3]);
  Matrix Hi, Hj, Hb;
  Vector r(15);
  r.head<9>() = pim_.residual(xi, xj, ImuBias::from_vector(bi), gravity_, H ? &Hi : nullptr,
                              H ? &Hj : nullptr, H ? &Hb : nullptr);
  r.tail<6>() = bj - bi;
  if (H) {
    Matrix Ai = Matrix::Zero(15, 9), Aj = Matrix::Zero(15, 9);
    Matrix Abi = Matrix::Zero(15, 6), Abj = Matrix::Zero(15, 6);
    Ai.topRows<9>() = Hi;
    Aj.topRows<9>() = Hj;
    Abi.topRows<9>() = Hb;
    Abi.bottomRows<6>() = -Matrix::Identity(6, 6);
    Abj.bottomRows<6>() = Matrix::Identity(6, 6);
    *H = {Ai, Aj, Abi, Abj};
  }
  return r;
}

}  // namespace legged
