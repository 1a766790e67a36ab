#pragma once

#include <span>

#include "legged_odom/liegroup.hpp"

namespace legged {

/// Mean on SE_K(3) with covariance over its right-perturbation tangent.
struct GaussianBelief {
  SEK3 mean;
  Matrix covariance;
};

/**
 * Kalman update in tangent coordinates.
 *
 * `innovation` is z - h(mean) and `H` the Jacobian of h with respect to the
 * right perturbation. The correction K*innovation is retracted on the right
 * and the covariance uses the Joseph form. Throws SingularityError if the
 * innovation covariance cannot be inverted.
 */
GaussianBelief ekf_update(const GaussianBelief& belief, const Matrix& H, const Vector& innovation,
                          const Matrix& measurement_covariance);

/**
 * Marginal covariance of the coordinates that remain after removing
 * `leaving` (indices into P), computed in information form as the inverse of
 * the Schur complement Lambda_rr - Lambda_rl Lambda_ll^-1 Lambda_lr.
 * Throws SingularityError if P is not positive definite.
 */
Matrix marginalize_out(const Matrix& P, std::span<const int> leaving);

/// Symmetrizes and reports the smallest eigenvalue (PSD checks in tests and asserts).
double min_eigenvalue(const Matrix& P);

}  // namespace legged
