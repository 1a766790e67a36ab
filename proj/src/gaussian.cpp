#include "legged_odom/gaussian.hpp"

#include <algorithm>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "legged_odom/errors.hpp"

namespace legged {

GaussianBelief ekf_update(const GaussianBelief& belief, const Matrix& H, const Vector& innovation,
                          const Matrix& measurement_covariance) {
  const Matrix& P = belief.covariance;
  const int n = static_cast<int>(P.rows());
  const int m = static_cast<int>(H.rows());
  if (H.cols() != n || innovation.size() != m || measurement_covariance.rows() != m ||
      measurement_covariance.cols() != m || belief.mean.dim() != n) {
    throw DimensionError("ekf_update: inconsistent dimensions");
  }
  // A loose foothold (sigma_f^2 ~ 1e6) observed by both contact and height
  // rows leaves S = H P H^T + R with a condition number near 1e9; forming and
  // solving it in extended precision keeps the gain good to ~1e-12.
  using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const LMat Pl = P.cast<long double>();
  const LMat Hl = H.cast<long double>();
  const LMat Rl = measurement_covariance.cast<long double>();
  const LMat PHt = Pl * Hl.transpose();
  const LMat S = Hl * PHt + Rl;
  Eigen::LLT<LMat> llt(S);
  if (llt.info() != Eigen::Success) {
    throw SingularityError("ekf_update: innovation covariance is not positive definite");
  }
  const LMat gain = llt.solve(PHt.transpose()).transpose();
  const LMat IKH = LMat::Identity(n, n) - gain * Hl;

  GaussianBelief out;
  out.mean = belief.mean.retract((gain * innovation.cast<long double>()).cast<double>());
  out.covariance = (IKH * Pl * IKH.transpose() + gain * Rl * gain.transpose()).cast<double>();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

Matrix marginalize_out(const Matrix& P, std::span<const int> leaving) {
  const int n = static_cast<int>(P.rows());
  if (P.cols() != n) throw DimensionError("marginalize_out: covariance must be square");
  std::vector<bool> is_leaving(n, false);
  for (int idx : leaving) {
    if (idx < 0 || idx >= n) throw DimensionError("marginalize_out: index out of range");
    is_leaving[idx] = true;
  }
  std::vector<int> keep, drop;
  for (int i = 0; i < n; ++i) (is_leaving[i] ? drop : keep).push_back(i);
  if (drop.empty()) return P;

  Eigen::LLT<Matrix> llt(P);
  if (llt.info() != Eigen::Success) {
    throw SingularityError("marginalize_out: covariance is not positive definite");
  }
  const Matrix Lambda = llt.solve(Matrix::Identity(n, n));
  const int r = static_cast<int>(keep.size());
  const int l = static_cast<int>(drop.size());
  Matrix Lrr(r, r), Lrl(r, l), Lll(l, l);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) Lrr(i, j) = Lambda(keep[i], keep[j]);
    for (int j = 0; j < l; ++j) Lrl(i, j) = Lambda(keep[i], drop[j]);
  }
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < l; ++j) Lll(i, j) = Lambda(drop[i], drop[j]);
  }
  Eigen::LLT<Matrix> lll(Lll);
  if (lll.info() != Eigen::Success) {
    throw SingularityError("marginalize_out: leaving information block is singular");
  }
  const Matrix schur = Lrr - Lrl * lll.solve(Lrl.transpose());
  Eigen::LLT<Matrix> ls(schur);
  if (ls.info() != Eigen::Success) {
    throw SingularityError("marginalize_out: Schur complement is singular");
  }
  Matrix out = ls.solve(Matrix::Identity(r, r));
  return 0.5 * (out + out.transpose());
}

double min_eigenvalue(const Matrix& P) {
  const Matrix sym = 0.5 * (P + P.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace legged
