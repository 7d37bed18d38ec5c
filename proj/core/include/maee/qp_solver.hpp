// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "maee/types.hpp"

namespace maee {

/// a^T x >= b.
struct LinearInequality {
  RVec a;
  double b = 0.0;
};

/// maximize 0.5 x^T quad x + lin^T x  s.t.  ineq,  lo <= x <= hi.
struct QpProblem {
  RMat quad;
  RVec lin;
  std::vector<LinearInequality> ineq;
  RVec lo;
  RVec hi;

  int dim() const { return static_cast<int>(lin.size()); }
  double objective(const RVec& x) const { return 0.5 * x.dot(quad * x) + lin.dot(x); }
  /// Largest amount by which x violates an inequality (0 when feasible).
  double max_violation(const RVec& x) const;
  /// Throws DimensionError / ConfigError on malformed data.
  void validate() const;
};

struct QpOptions {
  double tol = 1e-7;
  int max_outer = 60;
  int max_inner = 20000;
};

struct QpResult {
  RVec x;
  RVec multipliers;  // one per inequality, >= 0
  double kkt_residual = 0.0;
  int outer_iterations = 0;
  bool polished = false;
};

/// Projected Lagrangian-gradient norm plus maximum violation plus maximum
/// complementarity defect, all in the problem's own scaling.
double kkt_residual(const QpProblem& problem, const RVec& x, const RVec& multipliers);

/// Strongly concave QP over a box with linear inequalities. An augmented
/// Lagrangian on the inequalities (penalty 1e2 growing x10 up to 1e8 while
/// the violation stalls) is minimized by accelerated projected gradient; the
/// identified active set is then polished by solving its KKT system.
/// Throws InfeasibleError when no point meets the inequalities within 1e-6,
/// ConfigError when quad is not negative definite.
QpResult solve_qp(const QpProblem& problem, const RVec& x0, const QpOptions& options = {});

}  // namespace maee
