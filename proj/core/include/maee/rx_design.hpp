// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "maee/tx_design.hpp"

namespace maee {

/// Quadratic model of the receive-side DE rate around r_ref, in bits:
///   base + (tr(E J) - tr(E J E J)) / ln 2 - delta ||r - r_ref||^2,
/// where J(r) = sum_k d_k B_k is linear in the coordinate deviations d and
/// B_k = Delta E_kk + E_kk Delta^H for the x (Delta_X) or y (Delta_Y) entry
/// of antenna k.
struct RxSurrogate {
  CMat e_mat;    // (I + F^H Gamma F)^{-1}
  CMat delta_x;  // j 2 pi F^H Gamma Diag(sin theta cos phi) F
  CMat delta_y;  // j 2 pi F^H Gamma Diag(cos theta) F
  Apv r_ref;
  double delta_r = 0.02;
  double base_rate = 0.0;
  RVec lin;   // tr(E B_k) / ln 2, stacked (x_1, y_1, x_2, ...)
  RMat curv;  // tr(E B_k E B_l) / ln 2, positive semidefinite
};

/// Builds the model from a converged DE state at (t, r_ref, Q).
RxSurrogate build_rx_surrogate(const DeProblem& problem, const DeState& state,
                               const ScsiState& scsi, const Apv& apv_r_ref, double delta_r);
/// Convenience form that solves the DE at the reference first.
RxSurrogate build_rx_surrogate(const Scenario& scenario, const ScsiState& scsi, const Apv& apv_t,
                               const Apv& apv_r_ref, const CovMatrix& q, double delta_r,
                               const DeOptions& options = {});

/// Surrogate value through the trace formula with J assembled explicitly.
double rx_surrogate_value(const RxSurrogate& s, const Apv& apv_r);
/// Same value through the precomputed (lin, curv) quadratic form.
double rx_surrogate_quadratic(const RxSurrogate& s, const RVec& deviation);

/// Stationary point of the surrogate: (2 curv + 2 delta I) d = lin.
Apv solve_rx_unconstrained(const RxSurrogate& s);

/// Receive-side DE rate at r with (t, Q) fixed.
struct RxEvaluation {
  DeState de;
  double rate = 0.0;
};

struct RxContext {
  const Scenario& scenario;
  const ScsiState& scsi;
  Apv apv_t;
  CovMatrix q;
  DeOptions de;
};

RxEvaluation rate_of_r(const Apv& apv_r, const RxContext& ctx, const DeState* warm = nullptr);

struct RxSolveReport {
  Apv apv_r;
  RxEvaluation eval;
  std::vector<double> rate_trace;  // starts with the rate of apv_r0
  std::vector<double> step_sizes;
  int iterations = 0;
  int qp_calls = 0;
  bool line_search_exhausted = false;
};

RxSolveReport sca_optimize_rx(const RxContext& ctx, const Apv& apv_r0, const ScaParams& params);

}  // namespace maee
