#include "legged_odom/factor.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "legged_odom/errors.hpp"

namespace legged {

NoiseModel NoiseModel::from_covariance(const Matrix& covariance) {
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw SingularityError("NoiseModel: covariance is not positive definite");
  }
  // Sigma = L L^T  =>  Sigma^-1 = L^-T L^-1, so R = L^-1.
  const Matrix L = llt.matrixL();
  NoiseModel m;
  m.sqrt_info_ = L.triangularView<Eigen::Lower>().solve(
      Matrix::Identity(covariance.rows(), covariance.cols()));
  return m;
}

NoiseModel NoiseModel::from_sigmas(const Vector& sigmas) {
  NoiseModel m;
  m.sqrt_info_ = sigmas.cwiseInverse().asDiagonal();
  return m;
}

NoiseModel NoiseModel::isotropic(int dim, double sigma) {
  return from_sigmas(Vector::Constant(dim, sigma));
}

NoiseModel NoiseModel::unit(int dim) {
  NoiseModel m;
  m.sqrt_info_ = Matrix::Identity(dim, dim);
  return m;
}

NoiseModel NoiseModel::from_sqrt_information(Matrix sqrt_information) {
  NoiseModel m;
  m.sqrt_info_ = std::move(sqrt_information);
  return m;
}

NoiseModel NoiseModel::with_huber(double threshold) const {
  if (!(threshold > 0.0)) throw InputError("NoiseModel: Huber threshold must be positive");
  NoiseModel m = *this;
  m.huber_ = threshold;
  return m;
}

double NoiseModel::loss(double e) const {
  if (!huber_ || e <= *huber_) return 0.5 * e * e;
  return *huber_ * e - 0.5 * *huber_ * *huber_;
}

double NoiseModel::weight(double e) const {
  if (!huber_ || e <= *huber_) return 1.0;
  return *huber_ / e;
}

double Factor::error(const Values& values) const {
  const Vector w = noise_.whiten(evaluate(values, nullptr));
  return noise_.loss(w.norm());
}

LinearizedFactor Factor::linearize(const Values& values) const {
  std::vector<Matrix> H;
  const Vector r = evaluate(values, &H);
  LinearizedFactor lin;
  lin.b = noise_.whiten(r);
  const double e = lin.b.norm();
  lin.error = noise_.loss(e);
  const double s = std::sqrt(noise_.weight(e));
  lin.b *= s;
  lin.A.reserve(H.size());
  for (const Matrix& h : H) lin.A.push_back(s * (noise_.sqrt_information() * h));
  return lin;
}

GroupPriorFactor::GroupPriorFactor(Key key, SEK3 mean, NoiseModel noise)
    : Factor({key}, std::move(noise)), mean_(std::move(mean)) {
  if (this->noise().dim() != mean_.dim()) throw DimensionError("GroupPriorFactor: noise dim");
}

Vector GroupPriorFactor::evaluate(const Values& values, std::vector<Matrix>* H) const {
  const Vector r = mean_.local(values.group(keys()[0]));
  if (H) *H = {sek3_right_jacobian_inverse(r)};
  return r;
}

VectorPriorFactor::VectorPriorFactor(Key key, Vector mean, NoiseModel noise)
    : Factor({key}, std::move(noise)), mean_(std::move(mean)) {
  if (this->noise().dim() != mean_.size()) throw DimensionError("VectorPriorFactor: noise dim");
}

Vector VectorPriorFactor::evaluate(const Values& values, std::vector<Matrix>* H) const {
  const Vector& x = values.vector(keys()[0]);
  if (H) *H = {Matrix::Identity(x.size(), x.size())};
  return x - mean_;
}

LinearizedPriorFactor::LinearizedPriorFactor(std::vector<Key> keys, Values linearization_point,
                                             Matrix R, Vector e)
    : Factor(keys, NoiseModel::unit(static_cast<int>(R.rows()))),
      lin_(std::move(linearization_point)),
      R_(std::move(R)),
      e_(std::move(e)) {
  int offset = 0;
  for (const Key& k : this->keys()) {
    offsets_.push_back(offset);
    offset += variable_dim(lin_.at(k));
  }
  if (offset != R_.cols() || e_.size() != R_.rows()) {
    throw DimensionError("LinearizedPriorFactor: R/e do not match key dimensions");
  }
}

Vector LinearizedPriorFactor::evaluate(const Values& values, std::vector<Matrix>* H) const {
  Vector delta(R_.cols());
  if (H) H->clear();
  for (std::size_t i = 0; i < keys().size(); ++i) {
    const Key& k = keys()[i];
    const Variable& x0 = lin_.at(k);
    const Vector d = local(x0, values.at(k));
    const int n = static_cast<int>(d.size());
    delta.segment(offsets_[i], n) = d;
    if (H) {
      const Matrix chart = std::holds_alternative<SEK3>(x0) ? sek3_right_jacobian_inverse(d)
                                                            : Matrix::Identity(n, n);
      H->push_back(R_.middleCols(offsets_[i], n) * chart);
    }
  }
  return R_ * delta + e_;
}

}  // namespace legged
