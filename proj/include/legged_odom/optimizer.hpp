#pragma once

#include <map>
#include <optional>
#include <set>

#include "legged_odom/factor.hpp"

namespace legged {

struct LMSettings {
  double lambda_initial = 1e-4;
  double lambda_factor = 10.0;
  double lambda_max = 1e10;
  int max_iterations = 25;
  double relative_tolerance = 1e-8;
  double absolute_tolerance = 1e-14;
  /// Undamped steps that are always accepted (one iteration == one Gauss-Newton step).
  bool gauss_newton = false;
};

struct LMResult {
  Values values;
  std::map<Key, Matrix> marginals;
  int iterations = 0;
  double initial_error = 0.0;
  double final_error = 0.0;
};

/// Total (robust) cost of the graph.
double graph_error(const FactorGraph& graph, const Values& values);

/**
 * Levenberg-Marquardt over keyed manifold variables; the normal equations
 * are solved by sparse Cholesky. Marginal covariances of `marginal_keys` come from the
 * linearization at the returned values. Throws UnderConstrainedError naming
 * the keys spanning the null space when that system is rank deficient.
 */
LMResult lm_optimize(const FactorGraph& graph, const Values& initial,
                     const LMSettings& settings = {},
                     const std::vector<Key>& marginal_keys = {});

struct WindowMarginalization {
  FactorGraph graph;   ///< untouched factors plus `prior` when present
  FactorPtr prior;     ///< null when nothing connects the dropped keys to the rest
  std::vector<Key> boundary;
};

/**
 * Removes `drop` from the graph. Every factor touching a dropped key is
 * consumed; their joint linearization at `values` is reduced by a Schur
 * complement onto the remaining keys of those factors (the boundary).
 * If `allowed_boundary` is given, a consumed factor reaching a retained key
 * outside it raises StructureError.
 */
WindowMarginalization marginalize_window(const FactorGraph& graph, const Values& values,
                                         const std::set<Key>& drop,
                                         const std::optional<std::set<Key>>& allowed_boundary = {});

}  // namespace legged
