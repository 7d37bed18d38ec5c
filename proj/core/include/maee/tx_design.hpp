// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "maee/de_core.hpp"
#include "maee/qp_solver.hpp"

namespace maee {

/// Eigen-decomposition of the effective channel G^H Gamma~ G.
struct EigenChannel {
  CMat u;        // unitary, columns ordered like lambdas
  RVec lambdas;  // descending, clipped at 0

  static EigenChannel from_matrix(const CMat& a);
};

/// Per-mode powers [level - 1/lambda_i]^+ summing to p_max. Modes with
/// lambda_i <= 1e-12 * max(lambda) get no power.
RVec waterfill_powers(const RVec& lambdas, double p_max);
/// Water level of the allocation above (the common value of p_i + 1/lambda_i
/// on the active modes).
double water_level(const RVec& lambdas, double p_max);
CovMatrix waterfill(const EigenChannel& eigen, double p_max);

struct DinkelbachResult {
  CovMatrix q;
  std::vector<double> eta_trace;  // EE of every iterate, in bits/J
  int iterations = 0;
  bool converged = false;
};

/// Maximizes sum_i log2(1 + lambda_i p_i) / (omega sum_i p_i + N P_c + P_s)
/// over p >= 0 with the eigen-channel frozen. Each step water-fills at level
/// 1/(eta omega ln 2); stops once R - eta P_tot <= tol.
DinkelbachResult dinkelbach_q(const EigenChannel& eigen, const Scenario& scenario,
                              double tol = 1e-8, int max_iters = 50);

/// EE and rate of one (t, r, Q) probe under the DE.
struct DeEvaluation {
  DeState de;
  double rate = 0.0;  // bits/s/Hz, transmit-side DE
  double ee = 0.0;    // bits/J
};

DeEvaluation evaluate_de(const Scenario& scenario, const ScsiState& scsi, const Apv& apv_t,
                         const Apv& apv_r, const CovMatrix& q, const DeOptions& options = {});

struct InnerQOptions {
  DeOptions de;
  /// Stop once a refresh improves EE by less than rel_tol * EE.
  double rel_tol = 1e-12;
  int max_refresh = 40;
  double dinkelbach_tol = 1e-10;
};

struct InnerQResult {
  CovMatrix q;
  DeEvaluation eval;
  int refreshes = 0;
  std::vector<double> ee_trace;
  bool budget_active = false;
};

/// EE-optimal covariance for fixed (t, r). Starting from the better of
/// (P_max/N) I and `q_start`, each refresh re-solves the DE, freezes
/// G^H Gamma~ G, takes the Dinkelbach solution (or the water-filling at
/// P_max when the former exceeds the budget) as a target and backtracks
/// along the segment towards it until the true DE-EE increases.
InnerQResult inner_q(const Scenario& scenario, const ScsiState& scsi, const Apv& apv_t,
                     const Apv& apv_r, const InnerQOptions& options = {},
                     const CovMatrix* q_start = nullptr, const DeState* warm = nullptr);

/// Everything the transmit design holds fixed.
struct TxContext {
  const Scenario& scenario;
  const ScsiState& scsi;
  Apv apv_r;
  InnerQOptions inner;
};

/// EE(t) = R_t(t, Q(t)) / P_tot(Q(t)) with Q(t) from inner_q.
InnerQResult ee_of_t_full(const Apv& apv_t, const TxContext& ctx,
                          const InnerQResult* warm = nullptr);
double ee_of_t(const Apv& apv_t, const TxContext& ctx);

/// Forward differences [f(x + eps e_i) - f(x)] / eps. Probes are not
/// projected onto any feasible set. `f_x` may pass a known f(x).
RVec fd_gradient(const std::function<double(const RVec&)>& objective, const RVec& x, double eps1,
                 const double* f_x = nullptr, unsigned workers = 1);

/// Linearized min-distance constraints around apv_ref in stacked
/// coordinates: u_ij^T (t_i - t_j) >= D with u_ij the unit reference
/// direction. Throws NumericalError on coincident reference points.
std::vector<LinearInequality> linearize_min_distance(const Apv& apv_ref, double min_dist);

struct TxSolveReport {
  Apv apv_t;
  CovMatrix q;
  DeEvaluation eval;
  std::vector<double> ee_trace;  // starts with the EE of apv_t0
  std::vector<double> step_sizes;
  int outer_iters = 0;
  int inner_iters = 0;  // total inner_q refreshes
  int qp_calls = 0;
  bool line_search_exhausted = false;
};

struct ScaParams {
  double delta = 0.02;
  double eps1 = 1e-3;
  double eps2 = 1e-3;
  double tau0 = 1.0;
  double tau = 0.5;
  double xi = 0.6;
  int max_iters = 20;
  double min_tau = 1e-6;
  bool absolute_shortcut = false;
  /// Require increment >= xi tau ||xbar - x||^2 instead of xi tau times the
  /// model slope.
  bool quadratic_armijo = false;
};

ScaParams tx_sca_params(const SolverParams& params);
ScaParams rx_sca_params(const SolverParams& params);

/// Outcome of the generic position SCA below.
struct ScaReport {
  Apv apv;
  double value = 0.0;
  std::vector<double> trace;
  std::vector<double> step_sizes;
  int iterations = 0;
  int qp_calls = 0;
  bool line_search_exhausted = false;
};

/// The transmit-side SCA loop for an arbitrary objective of the stacked
/// positions: forward-difference gradient, proximal step towards
/// x + grad / (2 delta) within the region and the linearized distance
/// constraints, Armijo backtracking on the true objective.
ScaReport sca_maximize(const std::function<double(const RVec&)>& objective, const Apv& x0,
                       double side, double min_dist, const ScaParams& params);

TxSolveReport sca_optimize_tx(const TxContext& ctx, const Apv& apv_t0, const ScaParams& params,
                              const CovMatrix* q_start = nullptr);

/// Clamps every coordinate to the square [-side/2, side/2].
RVec clamp_to_region(const RVec& stacked, double side);
/// Whether x satisfies every inequality within tol.
bool satisfies(const std::vector<LinearInequality>& ineq, const RVec& x, double tol = 1e-12);

}  // namespace maee
