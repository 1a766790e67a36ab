#include <gtest/gtest.h>

#include <memory>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "legged_odom/errors.hpp"
#include "legged_odom/factors.hpp"
#include "legged_odom/gaussian.hpp"
#include "legged_odom/optimizer.hpp"
#include "support.hpp"

namespace legged {
namespace {

using testing::Gen;

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

/// r = sum_k A_k x_k - b over vector variables.
class LinearFactor : public Factor {
 public:
  LinearFactor(std::vector<Key> keys, std::vector<Matrix> A, Vector b, NoiseModel noise)
      : Factor(std::move(keys), std::move(noise)), A_(std::move(A)), b_(std::move(b)) {}
  Vector evaluate(const Values& values, std::vector<Matrix>* H) const override {
    Vector r = -b_;
    for (std::size_t k = 0; k < keys().size(); ++k) r += A_[k] * values.vector(keys()[k]);
    if (H) *H = A_;
    return r;
  }

 private:
  std::vector<Matrix> A_;
  Vector b_;
};

/// r = Log(Z^-1 a^-1 b) between two group variables, with numeric Jacobians.
class BetweenFactor : public Factor {
 public:
  BetweenFactor(Key a, Key b, SEK3 z, NoiseModel noise)
      : Factor({a, b}, std::move(noise)), z_(std::move(z)) {}
  Vector evaluate(const Values& values, std::vector<Matrix>* H) const override {
    const SEK3& a = values.group(keys()[0]);
    const SEK3& b = values.group(keys()[1]);
    const auto r = [&](const SEK3& x, const SEK3& y) { return z_.local(x.inverse() * y); };
    if (H) {
      H->clear();
      H->push_back(testing::numeric_jacobian([&](const Vector& d) { return r(a.retract(d), b); },
                                             a.dim(), 1e-7));
      H->push_back(testing::numeric_jacobian([&](const Vector& d) { return r(a, b.retract(d)); },
                                             b.dim(), 1e-7));
    }
    return r(a, b);
  }

 private:
  SEK3 z_;
};

Key vk(std::uint32_t i) { return {'v', i, 0}; }

// ---------------------------------------------------------------------------

TEST(EkfUpdate, ZeroJacobianLeavesBeliefUnchanged) {
  Gen g(1);
  const GaussianBelief b{g.sek3(2), g.spd(9)};
  const GaussianBelief post =
      ekf_update(b, Matrix::Zero(3, 9), g.vector(3), Matrix::Identity(3, 3));
  EXPECT_TRUE(post.mean.is_approx(b.mean, 1e-15));
  EXPECT_LT(max_abs(post.covariance - b.covariance), 1e-14);
}

TEST(EkfUpdate, ScalarTextbookCase) {
  const GaussianBelief b{SEK3::identity(0), Matrix::Identity(3, 3)};
  Matrix H = Matrix::Zero(1, 3);
  H(0, 0) = 1.0;
  const GaussianBelief post = ekf_update(b, H, Vector::Ones(1), Matrix::Identity(1, 1));
  EXPECT_NEAR(post.covariance(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(post.covariance(1, 1), 1.0, 1e-15);
  EXPECT_NEAR(b.mean.local(post.mean)(0), 0.5, 1e-15);
}

TEST(EkfUpdate, MatchesInformationFormFusion) {
  Gen g(2);
  for (int i = 0; i < 50; ++i) {
    const Matrix P = g.spd(9);
    const Matrix H = Matrix(g.vector(4 * 9).reshaped(4, 9));
    const Matrix R = g.spd(4);
    const Vector nu = g.vector(4, 0.1);
    const GaussianBelief post = ekf_update({SEK3::identity(2), P}, H, nu, R);
    const Matrix info = P.inverse() + H.transpose() * R.inverse() * H;
    const Matrix Ppost = info.inverse();
    EXPECT_LT(max_abs(post.covariance - Ppost), 1e-9);
    const Vector dx = Ppost * H.transpose() * R.inverse() * nu;
    EXPECT_LT((SEK3::identity(2).local(post.mean) - dx).norm(), 1e-9);
  }
}

TEST(EkfUpdate, JosephFormKeepsCovariancePsd) {
  Gen g(3);
  for (int i = 0; i < 100; ++i) {
    // Rank-deficient PSD prior and a nearly noiseless measurement.
    const Matrix B = Matrix(g.vector(9 * 5).reshaped(9, 5));
    const Matrix P = B * B.transpose();
    const Matrix H = Matrix(g.vector(3 * 9).reshaped(3, 9));
    const Matrix R = 1e-6 * g.spd(3);
    const GaussianBelief post = ekf_update({g.sek3(2), P}, H, g.vector(3), R);
    EXPECT_LT(max_abs(post.covariance - post.covariance.transpose()), 1e-12);
    EXPECT_GE(min_eigenvalue(post.covariance), -1e-9 * P.norm());
  }
}

TEST(EkfUpdate, RejectsBadShapes) {
  const GaussianBelief b{SEK3::identity(2), Matrix::Identity(9, 9)};
  EXPECT_THROW(ekf_update(b, Matrix::Zero(3, 8), Vector::Zero(3), Matrix::Identity(3, 3)),
               DimensionError);
  EXPECT_THROW(ekf_update(b, Matrix::Zero(3, 9), Vector::Zero(3), Matrix::Zero(3, 3)),
               SingularityError);
}

// ---------------------------------------------------------------------------

TEST(MarginalizeOut, BlockDiagonalKeepsRetainedBlock) {
  Gen g(4);
  Matrix P = Matrix::Zero(6, 6);
  P.topLeftCorner(3, 3) = g.spd(3);
  P.bottomRightCorner(3, 3) = g.spd(3);
  const std::vector<int> drop{3, 4, 5};
  EXPECT_LT(max_abs(marginalize_out(P, drop) - P.topLeftCorner(3, 3)), 1e-12);
}

TEST(MarginalizeOut, EqualsSubmatrixOverRandomSpd) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Gen g(1000 + seed);
    const int n = g.integer(4, 12);
    const Matrix P = g.spd(n);
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), std::mt19937_64(seed));
    const int k = g.integer(1, n - 1);
    std::vector<int> drop(all.begin(), all.begin() + k);
    std::vector<int> keep;
    for (int i = 0; i < n; ++i) {
      if (std::find(drop.begin(), drop.end(), i) == drop.end()) keep.push_back(i);
    }
    const Matrix M = marginalize_out(P, drop);
    ASSERT_EQ(M.rows(), static_cast<int>(keep.size()));
    EXPECT_LT(max_abs(M - P(keep, keep)), 1e-10 * std::max(1.0, max_abs(P))) << "seed " << seed;
  }
}

TEST(MarginalizeOut, DropLastThree) {
  Gen g(5);
  const Matrix P = g.spd(6);
  const std::vector<int> drop{3, 4, 5};
  EXPECT_LT(max_abs(marginalize_out(P, drop) - P.topLeftCorner(3, 3)), 1e-10);
}

TEST(MarginalizeOut, DropNothing) {
  Gen g(6);
  const Matrix P = g.spd(5);
  EXPECT_LT(max_abs(marginalize_out(P, std::vector<int>{}) - P), 1e-12);
}

TEST(MarginalizeOut, RejectsIndefinite) {
  Matrix P = Matrix::Identity(3, 3);
  P(2, 2) = -1.0;
  EXPECT_THROW(marginalize_out(P, std::vector<int>{0}), SingularityError);
  EXPECT_THROW(marginalize_out(Matrix::Identity(3, 3), std::vector<int>{3}), DimensionError);
}

// ---------------------------------------------------------------------------

TEST(NoiseModel, HuberLossAndWeight) {
  const NoiseModel q = NoiseModel::isotropic(3, 2.0);
  EXPECT_DOUBLE_EQ(q.loss(3.0), 4.5);
  EXPECT_DOUBLE_EQ(q.weight(3.0), 1.0);
  const NoiseModel h = q.with_huber(1.0);
  EXPECT_DOUBLE_EQ(h.loss(0.5), 0.125);
  EXPECT_DOUBLE_EQ(h.loss(3.0), 3.0 - 0.5);
  EXPECT_DOUBLE_EQ(h.weight(3.0), 1.0 / 3.0);
  EXPECT_LT(max_abs(q.sqrt_information() - 0.5 * Matrix::Identity(3, 3)), 1e-15);
  EXPECT_THROW(q.with_huber(0.0), InputError);
}

TEST(NoiseModel, FromCovarianceWhitens) {
  Gen g(7);
  const Matrix C = g.spd(5);
  const NoiseModel n = NoiseModel::from_covariance(C);
  const Matrix R = n.sqrt_information();
  EXPECT_LT(max_abs(R.transpose() * R - C.inverse()), 1e-9);
  EXPECT_THROW(NoiseModel::from_covariance(-Matrix::Identity(2, 2)), SingularityError);
}

// ---------------------------------------------------------------------------

TEST(LmOptimize, SinglePriorReturnsPrior) {
  Gen g(8);
  const SEK3 mean = g.sek3(2);
  const Matrix C = 0.01 * g.spd(9);
  FactorGraph graph{std::make_shared<GroupPriorFactor>(state_key(), mean,
                                                       NoiseModel::from_covariance(C))};
  Values init;
  init.insert(state_key(), mean.retract(g.vector(9, 0.05)));
  const LMResult r = lm_optimize(graph, init, {}, {state_key()});
  EXPECT_TRUE(r.values.group(state_key()).is_approx(mean, 1e-7));
  EXPECT_LT(max_abs(r.marginals.at(state_key()) - C), 1e-9);
  EXPECT_LT(r.final_error, 1e-12);
}

struct LinearProblem {
  FactorGraph graph;
  Matrix A;  // stacked whitened Jacobian
  Vector b;
};

LinearProblem random_linear_problem(Gen& g) {
  LinearProblem p;
  const int n = 3;
  p.A = Matrix::Zero(0, 3 * n);
  p.b = Vector(0);
  auto add = [&](std::vector<int> ids, int rows) {
    std::vector<Key> keys;
    std::vector<Matrix> blocks;
    Matrix row = Matrix::Zero(rows, 3 * n);
    for (int id : ids) {
      keys.push_back(vk(id));
      blocks.push_back(Matrix(g.vector(rows * 3).reshaped(rows, 3)));
      row.middleCols(3 * id, 3) = blocks.back();
    }
    const Vector b = g.vector(rows);
    const double sigma = g.uniform(0.5, 2.0);
    p.graph.push_back(
        std::make_shared<LinearFactor>(keys, blocks, b, NoiseModel::isotropic(rows, sigma)));
    p.A.conservativeResize(p.A.rows() + rows, Eigen::NoChange);
    p.A.bottomRows(rows) = row / sigma;
    p.b.conservativeResize(p.b.size() + rows);
    p.b.tail(rows) = b / sigma;
  };
  add({0}, 3);
  add({0, 1}, 3);
  add({1, 2}, 4);
  add({2}, 2);
  add({0, 2}, 3);
  return p;
}

Values random_vector_values(Gen& g, int n, double scale) {
  Values v;
  for (int i = 0; i < n; ++i) v.insert(vk(i), g.vector(3, scale));
  return v;
}

TEST(LmOptimize, LinearGraphMatchesNormalEquations) {
  Gen g(9);
  for (int trial = 0; trial < 20; ++trial) {
    const LinearProblem p = random_linear_problem(g);
    const Vector x = (p.A.transpose() * p.A).ldlt().solve(p.A.transpose() * p.b);
    LMSettings s;
    s.lambda_initial = 1e-14;
    s.max_iterations = 1;
    const LMResult r = lm_optimize(p.graph, random_vector_values(g, 3, 5.0), s, {vk(1)});
    EXPECT_EQ(r.iterations, 1);
    for (int i = 0; i < 3; ++i) {
      EXPECT_LT((r.values.vector(vk(i)) - x.segment(3 * i, 3)).norm(), 1e-9);
    }
    const Matrix cov = (p.A.transpose() * p.A).inverse();
    EXPECT_LT(max_abs(r.marginals.at(vk(1)) - cov.block(3, 3, 3, 3)), 1e-9);
  }
}

TEST(LmOptimize, AffineResultIndependentOfInitialization) {
  Gen g(10);
  for (int trial = 0; trial < 20; ++trial) {
    const LinearProblem p = random_linear_problem(g);
    const LMResult a = lm_optimize(p.graph, random_vector_values(g, 3, 10.0));
    const LMResult b = lm_optimize(p.graph, random_vector_values(g, 3, 10.0));
    for (int i = 0; i < 3; ++i) {
      EXPECT_LT((a.values.vector(vk(i)) - b.values.vector(vk(i))).norm(), 1e-8);
    }
  }
}

TEST(LmOptimize, SingleGaussNewtonStepEqualsEkfUpdate) {
  Gen g(11);
  for (int trial = 0; trial < 50; ++trial) {
    const SEK3 X = g.sek3(6);
    const Matrix P = 0.05 * g.spd(21);
    const double sigma = 0.03;
    FactorGraph graph{std::make_shared<GroupPriorFactor>(state_key(), X,
                                                         NoiseModel::from_covariance(P))};
    Matrix H(0, 21);
    Vector nu(0);
    for (int col = 2; col < 6; ++col) {
      const Vector3 z = g.vec3(0.5);
      graph.push_back(std::make_shared<FilterContactFactor>(state_key(), col, z,
                                                            NoiseModel::isotropic(3, sigma)));
      const FilterMeasurement m = contact_residual_filter(X, col, z);
      H.conservativeResize(H.rows() + 3, Eigen::NoChange);
      H.bottomRows(3) = m.H;
      nu.conservativeResize(nu.size() + 3);
      nu.tail(3) = m.residual;
    }
    Vector noise = Vector::Constant(H.rows(), sigma * sigma);
    for (int col = 2; col < 6; col += 2) {
      const double sh = 0.02;
      graph.push_back(std::make_shared<FilterHeightFactor>(state_key(), col, 0.1, sh));
      const FilterMeasurement m = height_residual_filter(X, col, 0.1);
      H.conservativeResize(H.rows() + 1, Eigen::NoChange);
      H.bottomRows(1) = m.H;
      nu.conservativeResize(nu.size() + 1);
      nu.tail(1) = m.residual;
      noise.conservativeResize(noise.size() + 1);
      noise.tail(1).setConstant(sh * sh);
    }
    const GaussianBelief ekf = ekf_update({X, P}, H, nu, noise.asDiagonal().toDenseMatrix());
    LMSettings s;
    s.gauss_newton = true;
    s.max_iterations = 1;
    Values init;
    init.insert(state_key(), X);
    const LMResult r = lm_optimize(graph, init, s, {state_key()});
    EXPECT_LT((X.local(r.values.group(state_key())) - X.local(ekf.mean)).norm(), 1e-9);
    EXPECT_LT(max_abs(r.marginals.at(state_key()) - ekf.covariance), 1e-9);
  }
}

TEST(LmOptimize, RankDeficiencyNamesKeys) {
  // Only the difference v0 - v1 is observed.
  FactorGraph graph{std::make_shared<LinearFactor>(
      std::vector<Key>{vk(0), vk(1)},
      std::vector<Matrix>{Matrix::Identity(3, 3), -Matrix::Identity(3, 3)}, Vector::Ones(3),
      NoiseModel::unit(3))};
  Values v;
  v.insert(vk(0), Vector::Zero(3));
  v.insert(vk(1), Vector::Zero(3));
  try {
    lm_optimize(graph, v);
    FAIL() << "expected UnderConstrainedError";
  } catch (const UnderConstrainedError& e) {
    EXPECT_NE(std::string(e.what()).find("v0"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("v1"), std::string::npos);
  }
}

TEST(LmOptimize, MissingKeyIsStructureError) {
  FactorGraph graph{std::make_shared<VectorPriorFactor>(vk(0), Vector::Zero(3), NoiseModel::unit(3))};
  EXPECT_THROW(lm_optimize(graph, Values{}), StructureError);
}

TEST(LmOptimize, ConvergesOnNonlinearChain) {
  Gen g(12);
  const SEK3 x0 = g.sek3(2);
  const SEK3 z = g.sek3(2, 0.5);
  FactorGraph graph{
      std::make_shared<GroupPriorFactor>(nav_key(0), x0, NoiseModel::isotropic(9, 0.01)),
      std::make_shared<BetweenFactor>(nav_key(0), nav_key(1), z, NoiseModel::isotropic(9, 0.1))};
  Values init;
  init.insert(nav_key(0), x0.retract(g.vector(9, 0.2)));
  init.insert(nav_key(1), (x0 * z).retract(g.vector(9, 0.5)));
  const LMResult r = lm_optimize(graph, init);
  EXPECT_TRUE(r.values.group(nav_key(1)).is_approx(x0 * z, 1e-7));
  EXPECT_LT(r.final_error, 1e-12);
}

// ---------------------------------------------------------------------------

TEST(MarginalizeWindow, IsolatedKeyProducesNoPrior) {
  FactorGraph graph{
      std::make_shared<VectorPriorFactor>(vk(0), Vector::Zero(3), NoiseModel::unit(3)),
      std::make_shared<VectorPriorFactor>(vk(1), Vector::Ones(3), NoiseModel::unit(3))};
  Values v;
  v.insert(vk(0), Vector::Zero(3));
  v.insert(vk(1), Vector::Ones(3));
  const WindowMarginalization m = marginalize_window(graph, v, {vk(0)});
  EXPECT_EQ(m.prior, nullptr);
  EXPECT_TRUE(m.boundary.empty());
  ASSERT_EQ(m.graph.size(), 1u);
  EXPECT_EQ(m.graph[0], graph[1]);
}

TEST(MarginalizeWindow, DropNothingIsIdentity) {
  Gen g(13);
  const LinearProblem p = random_linear_problem(g);
  const WindowMarginalization m = marginalize_window(p.graph, random_vector_values(g, 3, 1.0), {});
  EXPECT_EQ(m.prior, nullptr);
  EXPECT_EQ(m.graph, p.graph);
}

TEST(MarginalizeWindow, LinearChainMatchesDenseMarginal) {
  Gen g(14);
  for (int trial = 0; trial < 20; ++trial) {
    // x0 -- x1 -- x2 with a prior on x0.
    FactorGraph graph;
    auto rnd = [&]() -> Matrix { return Matrix(g.vector(9).reshaped(3, 3)) + 2.0 * Matrix::Identity(3, 3); };
    graph.push_back(std::make_shared<LinearFactor>(std::vector<Key>{vk(0)}, std::vector<Matrix>{rnd()},
                                                   g.vector(3), NoiseModel::isotropic(3, 0.5)));
    graph.push_back(std::make_shared<LinearFactor>(std::vector<Key>{vk(0), vk(1)},
                                                   std::vector<Matrix>{rnd(), -rnd()}, g.vector(3),
                                                   NoiseModel::isotropic(3, 0.2)));
    graph.push_back(std::make_shared<LinearFactor>(std::vector<Key>{vk(1), vk(2)},
                                                   std::vector<Matrix>{rnd(), -rnd()}, g.vector(3),
                                                   NoiseModel::isotropic(3, 0.3)));
    const Values init = random_vector_values(g, 3, 1.0);
    LMSettings gn;
    gn.gauss_newton = true;
    gn.max_iterations = 1;
    const LMResult full = lm_optimize(graph, init, gn, {vk(1), vk(2)});

    const WindowMarginalization m = marginalize_window(graph, init, {vk(0)}, std::set<Key>{vk(1)});
    ASSERT_NE(m.prior, nullptr);
    EXPECT_EQ(m.boundary, std::vector<Key>{vk(1)});
    Values rest = init;
    rest.erase(vk(0));
    const LMResult reduced = lm_optimize(m.graph, rest, gn, {vk(1), vk(2)});
    for (Key k : {vk(1), vk(2)}) {
      EXPECT_LT((reduced.values.vector(k) - full.values.vector(k)).norm(), 1e-9);
      EXPECT_LT(max_abs(reduced.marginals.at(k) - full.marginals.at(k)), 1e-9);
    }
  }
}

TEST(MarginalizeWindow, NonlinearChainConsistentAtOptimum) {
  Gen g(15);
  for (int trial = 0; trial < 5; ++trial) {
    const SEK3 x0 = g.sek3(2);
    FactorGraph graph{
        std::make_shared<GroupPriorFactor>(nav_key(0), x0, NoiseModel::isotropic(9, 0.05))};
    Values init;
    init.insert(nav_key(0), x0);
    SEK3 x = x0;
    for (std::uint32_t i = 1; i <= 3; ++i) {
      const SEK3 z = g.sek3(2, 0.5);
      graph.push_back(std::make_shared<BetweenFactor>(nav_key(i - 1), nav_key(i), z,
                                                      NoiseModel::isotropic(9, 0.1)));
      x = x * z;
      init.insert(nav_key(i), x.retract(g.vector(9, 0.05)));
    }
    // A second measurement closing x1 -> x3 makes the problem non-trivial.
    graph.push_back(std::make_shared<BetweenFactor>(
        nav_key(1), nav_key(3), init.group(nav_key(1)).inverse() * x, NoiseModel::isotropic(9, 0.2)));
    const LMResult full = lm_optimize(graph, init, {}, {nav_key(2), nav_key(3)});

    const WindowMarginalization m = marginalize_window(graph, full.values, {nav_key(0), nav_key(1)});
    Values rest = full.values;
    rest.erase(nav_key(0));
    rest.erase(nav_key(1));
    const LMResult reduced = lm_optimize(m.graph, rest, {}, {nav_key(2), nav_key(3)});
    for (Key k : {nav_key(2), nav_key(3)}) {
      EXPECT_TRUE(reduced.values.group(k).is_approx(full.values.group(k), 1e-8));
      EXPECT_LT(max_abs(reduced.marginals.at(k) - full.marginals.at(k)), 1e-8);
    }
  }
}

TEST(MarginalizeWindow, BoundaryViolationIsStructureError) {
  Gen g(16);
  const LinearProblem p = random_linear_problem(g);
  EXPECT_THROW(marginalize_window(p.graph, random_vector_values(g, 3, 1.0), {vk(0)},
                                  std::set<Key>{vk(1)}),
               StructureError);
}

}  // namespace
}  // namespace legged
