#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "legged_odom/values.hpp"

namespace legged {

/**
 * Gaussian noise stored as a square-root information matrix, with an
 * optional Huber loss applied to the whitened residual norm.
 */
class NoiseModel {
 public:
  NoiseModel() = default;
  static NoiseModel from_covariance(const Matrix& covariance);
  static NoiseModel from_sigmas(const Vector& sigmas);
  static NoiseModel isotropic(int dim, double sigma);
  static NoiseModel unit(int dim);
  /// `sqrt_information` is any R with R^T R = covariance^-1.
  static NoiseModel from_sqrt_information(Matrix sqrt_information);

  /// Huber threshold in whitened units; disabled when unset.
  NoiseModel with_huber(double threshold) const;

  int dim() const { return static_cast<int>(sqrt_info_.cols()); }
  const Matrix& sqrt_information() const { return sqrt_info_; }
  std::optional<double> huber_threshold() const { return huber_; }

  Vector whiten(const Vector& r) const { return sqrt_info_ * r; }
  /// Loss of a whitened residual norm: e^2/2, or the Huber loss beyond the threshold.
  double loss(double whitened_norm) const;
  /// IRLS weight w(e) such that the reweighted quadratic matches the loss gradient.
  double weight(double whitened_norm) const;

 private:
  Matrix sqrt_info_;
  std::optional<double> huber_;
};

/// Whitened (and robust-reweighted) linearization: cost ~ 0.5 * |b + sum_k A_k d_k|^2.
struct LinearizedFactor {
  Vector b;
  std::vector<Matrix> A;
  double error = 0.0;  ///< loss at the linearization point
};

class Factor {
 public:
  Factor(std::vector<Key> keys, NoiseModel noise)
      : keys_(std::move(keys)), noise_(std::move(noise)) {}
  virtual ~Factor() = default;

  const std::vector<Key>& keys() const { return keys_; }
  const NoiseModel& noise() const { return noise_; }
  int dim() const { return noise_.dim(); }

  /**
   * Raw residual r(x); when `H` is non-null it receives one Jacobian per key
   * with respect to that key's chart.
   */
  virtual Vector evaluate(const Values& values, std::vector<Matrix>* H) const = 0;

  double error(const Values& values) const;
  LinearizedFactor linearize(const Values& values) const;

 private:
  std::vector<Key> keys_;
  NoiseModel noise_;
};

using FactorPtr = std::shared_ptr<const Factor>;
using FactorGraph = std::vector<FactorPtr>;

/// Prior on a group variable: r = Log(mean^-1 X).
class GroupPriorFactor : public Factor {
 public:
  GroupPriorFactor(Key key, SEK3 mean, NoiseModel noise);
  Vector evaluate(const Values& values, std::vector<Matrix>* H) const override;
  const SEK3& mean() const { return mean_; }

 private:
  SEK3 mean_;
};

/// Prior on a vector variable: r = x - mean.
class VectorPriorFactor : public Factor {
 public:
  VectorPriorFactor(Key key, Vector mean, NoiseModel noise);
  Vector evaluate(const Values& values, std::vector<Matrix>* H) const override;

 private:
  Vector mean_;
};

/**
 * Gaussian summary of marginalized factors on a set of boundary keys, held
 * at a fixed linearization point: cost 0.5 * |R d + e|^2 with d the stacked
 * chart coordinates of the current values around the linearization point.
 */
class LinearizedPriorFactor : public Factor {
 public:
  LinearizedPriorFactor(std::vector<Key> keys, Values linearization_point, Matrix R, Vector e);
  Vector evaluate(const Values& values, std::vector<Matrix>* H) const override;

  const Values& linearization_point() const { return lin_; }
  const Matrix& information_sqrt() const { return R_; }
  const Vector& offset() const { return e_; }

 private:
  Values lin_;
  Matrix R_;
  Vector e_;
  std::vector<int> offsets_;
};

}  // namespace legged
