#include "legged_odom/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "legged_odom/errors.hpp"

namespace legged {

namespace {

struct Ordering {
  std::vector<Key> keys;
  std::map<Key, int> offset;
  std::map<Key, int> dim;
  int total = 0;

  void add(const Key& k, int d) {
    if (offset.count(k)) return;
    keys.push_back(k);
    offset[k] = total;
    dim[k] = d;
    total += d;
  }
};

Ordering make_ordering(const FactorGraph& graph, const Values& values) {
  std::set<Key> used;
  for (const auto& f : graph) {
    for (const Key& k : f->keys()) {
      if (!values.contains(k)) throw StructureError("graph references missing key " + k.str());
      used.insert(k);
    }
  }
  Ordering ord;
  for (const Key& k : used) ord.add(k, variable_dim(values.at(k)));
  return ord;
}

struct NormalEquations {
  Matrix H;
  Vector g;
  double error = 0.0;
};

NormalEquations build_system(const FactorGraph& graph, const Values& values,
                             const Ordering& ord) {
  NormalEquations sys;
  sys.H = Matrix::Zero(ord.total, ord.total);
  sys.g = Vector::Zero(ord.total);
  for (const auto& f : graph) {
    const LinearizedFactor lin = f->linearize(values);
    sys.error += lin.error;
    const auto& keys = f->keys();
    for (std::size_t a = 0; a < keys.size(); ++a) {
      const int oa = ord.offset.at(keys[a]);
      const Matrix& Aa = lin.A[a];
      sys.g.segment(oa, Aa.cols()) += Aa.transpose() * lin.b;
      for (std::size_t b = 0; b < keys.size(); ++b) {
        const int ob = ord.offset.at(keys[b]);
        const Matrix& Ab = lin.A[b];
        sys.H.block(oa, ob, Aa.cols(), Ab.cols()) += Aa.transpose() * Ab;
      }
    }
  }
  return sys;
}

using SparseMatrix = Eigen::SparseMatrix<double>;
using SparseSolver = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

struct SparseNormalEquations {
  SparseMatrix H;
  Vector g;
  double error = 0.0;
};

SparseNormalEquations build_sparse_system(const FactorGraph& graph, const Values& values,
                                          const Ordering& ord) {
  SparseNormalEquations sys;
  sys.g = Vector::Zero(ord.total);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(graph.size() * 4 * 81 + ord.total);
  for (const auto& f : graph) {
    const LinearizedFactor lin = f->linearize(values);
    sys.error += lin.error;
    const auto& keys = f->keys();
    for (std::size_t a = 0; a < keys.size(); ++a) {
      const int oa = ord.offset.at(keys[a]);
      const Matrix& Aa = lin.A[a];
      sys.g.segment(oa, Aa.cols()) += Aa.transpose() * lin.b;
      for (std::size_t b = 0; b < keys.size(); ++b) {
        const int ob = ord.offset.at(keys[b]);
        const Matrix block = Aa.transpose() * lin.A[b];
        for (int c = 0; c < block.cols(); ++c) {
          for (int r = 0; r < block.rows(); ++r) triplets.emplace_back(oa + r, ob + c, block(r, c));
        }
      }
    }
  }
  // Explicit diagonal so damping always has an entry to modify.
  for (int i = 0; i < ord.total; ++i) triplets.emplace_back(i, i, 0.0);
  sys.H.resize(ord.total, ord.total);
  sys.H.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

Values apply_step(const Values& values, const Ordering& ord, const Vector& delta) {
  Values out = values;
  for (const Key& k : ord.keys) {
    out.update(k, retract(values.at(k), delta.segment(ord.offset.at(k), ord.dim.at(k))));
  }
  return out;
}

[[noreturn]] void report_rank_deficiency(const Matrix& H, const Ordering& ord) {
  const Vector d = H.diagonal().cwiseMax(0.0);
  const double dmax = std::max(d.maxCoeff(), 1e-300);
  Vector scale(d.size());
  for (int i = 0; i < d.size(); ++i) scale(i) = d(i) > 1e-14 * dmax ? 1.0 / std::sqrt(d(i)) : 0.0;
  const Matrix S = scale.asDiagonal() * H * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  std::set<Key> offending;
  for (const Key& k : ord.keys) {
    const int o = ord.offset.at(k);
    for (int j = 0; j < ord.dim.at(k); ++j) {
      if (scale(o + j) == 0.0) offending.insert(k);
    }
  }
  const double emax = std::max(es.eigenvalues().maxCoeff(), 1.0);
  for (int c = 0; c < es.eigenvalues().size(); ++c) {
    if (es.eigenvalues()(c) > 1e-12 * emax) continue;
    const Vector v = es.eigenvectors().col(c);
    for (const Key& k : ord.keys) {
      if (v.segment(ord.offset.at(k), ord.dim.at(k)).norm() > 1e-3) offending.insert(k);
    }
  }
  std::ostringstream msg;
  msg << "under-constrained system; unconstrained keys:";
  for (const Key& k : offending) msg << ' ' << k.str();
  throw UnderConstrainedError(msg.str());
}

// Jacobi scaling 1/sqrt(diag); the priors here span many decades (a loose
// foothold next to a tight position), and the raw system loses digits.
Vector jacobi_scale(const SparseMatrix& H) {
  return H.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
}

// Factors the scaled form of H after a conditioning check on its pivots.
// Returns the scale, so H^-1 = S (S H S)^-1 S.
Vector checked_factorization(const SparseMatrix& H, const Ordering& ord, SparseSolver& solver) {
  const Vector d = H.diagonal();
  if (ord.total > 0 && d.minCoeff() <= 0.0) report_rank_deficiency(Matrix(H), ord);
  const Vector s = jacobi_scale(H);
  const SparseMatrix scaled = s.asDiagonal() * H * s.asDiagonal();
  // LDL^T pivots of the scaled system are the squared LL^T pivots.
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> check(scaled);
  if (check.info() != Eigen::Success) report_rank_deficiency(Matrix(H), ord);
  const Vector pivots = check.vectorD();
  if (pivots.minCoeff() < 1e-15 * pivots.maxCoeff()) report_rank_deficiency(Matrix(H), ord);
  solver.compute(scaled);
  if (solver.info() != Eigen::Success) report_rank_deficiency(Matrix(H), ord);
  return s;
}

}  // namespace

double graph_error(const FactorGraph& graph, const Values& values) {
  double e = 0.0;
  for (const auto& f : graph) e += f->error(values);
  return e;
}

LMResult lm_optimize(const FactorGraph& graph, const Values& initial, const LMSettings& settings,
                     const std::vector<Key>& marginal_keys) {
  const Ordering ord = make_ordering(graph, initial);
  LMResult result;
  result.values = initial;

  SparseNormalEquations sys = build_sparse_system(graph, result.values, ord);
  result.initial_error = sys.error;
  double lambda = settings.gauss_newton ? 0.0 : settings.lambda_initial;
  SparseSolver solver;
  solver.analyzePattern(sys.H);
  // Linearization behind the last accepted step. When the iteration budget
  // runs out the marginal comes from here (the iterated-EKF convention);
  // otherwise from the final point.
  SparseMatrix step_H = sys.H;
  bool budget_exhausted = settings.max_iterations > 0;

  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    if (sys.error <= settings.absolute_tolerance && !settings.gauss_newton) {
      budget_exhausted = false;
      break;
    }
    bool accepted = false;
    bool converged = false;
    while (!accepted) {
      SparseMatrix A = sys.H;
      if (lambda > 0.0) {
        for (int i = 0; i < ord.total; ++i) {
          A.coeffRef(i, i) += lambda * std::max(sys.H.coeff(i, i), 1e-6);
        }
      }
      const Vector scale = jacobi_scale(A);
      solver.factorize(scale.asDiagonal() * A * scale.asDiagonal());
      if (solver.info() != Eigen::Success) {
        if (settings.gauss_newton) report_rank_deficiency(Matrix(sys.H), ord);
        lambda = std::max(lambda * settings.lambda_factor, 1e-8);
        if (lambda > settings.lambda_max) break;
        continue;
      }
      const Vector delta = scale.cwiseProduct(solver.solve(-scale.cwiseProduct(sys.g)));
      Values candidate = apply_step(result.values, ord, delta);
      SparseNormalEquations next = build_sparse_system(graph, candidate, ord);
      if (settings.gauss_newton || next.error <= sys.error) {
        const double decrease = sys.error - next.error;
        converged = decrease <= settings.relative_tolerance * sys.error ||
                    next.error <= settings.absolute_tolerance;
        result.values = std::move(candidate);
        step_H = std::move(sys.H);
        sys = std::move(next);
        accepted = true;
        lambda /= settings.lambda_factor;
      } else {
        lambda = std::max(lambda * settings.lambda_factor, 1e-8);
        if (lambda > settings.lambda_max) break;
      }
    }
    if (!accepted || (converged && !settings.gauss_newton)) {
      result.iterations += accepted ? 1 : 0;
      budget_exhausted = false;
      break;
    }
    ++result.iterations;
  }
  result.final_error = sys.error;

  const Vector scale = checked_factorization(
      budget_exhausted && result.iterations > 0 ? step_H : sys.H, ord, solver);
  for (const Key& k : marginal_keys) {
    auto it = ord.offset.find(k);
    if (it == ord.offset.end()) throw StructureError("marginal requested for unknown key " + k.str());
    const int d = ord.dim.at(k);
    Matrix E = Matrix::Zero(ord.total, d);
    E.middleRows(it->second, d).setIdentity();
    const Matrix cols = scale.asDiagonal() * solver.solve(scale.asDiagonal() * E);
    Matrix block = cols.middleRows(it->second, d);
    result.marginals[k] = 0.5 * (block + block.transpose());
  }
  return result;
}

WindowMarginalization marginalize_window(const FactorGraph& graph, const Values& values,
                                         const std::set<Key>& drop,
                                         const std::optional<std::set<Key>>& allowed_boundary) {
  WindowMarginalization out;
  FactorGraph consumed;
  std::set<Key> boundary;
  for (const auto& f : graph) {
    const bool touches = std::any_of(f->keys().begin(), f->keys().end(),
                                     [&](const Key& k) { return drop.count(k) != 0; });
    if (!touches) {
      out.graph.push_back(f);
      continue;
    }
    consumed.push_back(f);
    for (const Key& k : f->keys()) {
      if (drop.count(k)) continue;
      if (allowed_boundary && !allowed_boundary->count(k)) {
        throw StructureError("marginalize_window: dropped variables connect to non-boundary key " +
                             k.str());
      }
      boundary.insert(k);
    }
  }
  if (consumed.empty() || boundary.empty()) return out;

  Ordering ord;
  for (const auto& f : consumed) {
    for (const Key& k : f->keys()) {
      if (drop.count(k)) ord.add(k, variable_dim(values.at(k)));
    }
  }
  const int nd = ord.total;
  for (const Key& k : boundary) ord.add(k, variable_dim(values.at(k)));
  const int nb = ord.total - nd;

  const NormalEquations sys = build_system(consumed, values, ord);
  const Matrix Hdd = sys.H.topLeftCorner(nd, nd);
  const Matrix Hbd = sys.H.bottomLeftCorner(nb, nd);
  Matrix Hbb = sys.H.bottomRightCorner(nb, nb);
  Vector gb = sys.g.tail(nb);

  Matrix HddInv_Hdb;
  Vector HddInv_gd;
  Eigen::LLT<Matrix> llt(Hdd);
  if (llt.info() == Eigen::Success) {
    HddInv_Hdb = llt.solve(Hbd.transpose());
    HddInv_gd = llt.solve(sys.g.head(nd));
  } else {
    // Pseudo-inverse: directions of dropped variables without information carry none over.
    Eigen::SelfAdjointEigenSolver<Matrix> es(Hdd);
    const double emax = std::max(es.eigenvalues().maxCoeff(), 1e-300);
    Vector inv = es.eigenvalues();
    for (int i = 0; i < inv.size(); ++i) inv(i) = inv(i) > 1e-12 * emax ? 1.0 / inv(i) : 0.0;
    const Matrix pinv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    HddInv_Hdb = pinv * Hbd.transpose();
    HddInv_gd = pinv * sys.g.head(nd);
  }
  Matrix Lambda = Hbb - Hbd * HddInv_Hdb;
  Lambda = 0.5 * (Lambda + Lambda.transpose()).eval();
  const Vector eta = gb - Hbd * HddInv_gd;

  // 0.5 d^T Lambda d + eta^T d  ==  0.5 |R d + e|^2 up to a constant.
  Eigen::SelfAdjointEigenSolver<Matrix> es(Lambda);
  const double emax = es.eigenvalues().maxCoeff();
  std::vector<int> rows;
  for (int i = 0; i < nb; ++i) {
    if (es.eigenvalues()(i) > 1e-12 * std::max(emax, 1e-300)) rows.push_back(i);
  }
  if (rows.empty()) return out;
  Matrix R(rows.size(), nb);
  Vector e(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double s = std::sqrt(es.eigenvalues()(rows[r]));
    const Vector v = es.eigenvectors().col(rows[r]);
    R.row(r) = s * v.transpose();
    e(r) = v.dot(eta) / s;
  }

  Values lin;
  std::vector<Key> keys(boundary.begin(), boundary.end());
  for (const Key& k : keys) lin.insert(k, values.at(k));
  out.prior = std::make_shared<LinearizedPriorFactor>(keys, std::move(lin), std::move(R),
                                                      std::move(e));
  out.boundary = keys;
  out.graph.push_back(out.prior);
  return out;
}

}  // namespace legged
