// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "maee/oracle.hpp"
#include "maee/scenario.hpp"

namespace maee {

/// Precomputed inputs of the deterministic-equivalent (DE) iteration for one
/// (t, r, Q) probe.
struct DeProblem {
  CMat g;          // L_t x N transmit field response
  CMat f;          // L_r x M receive field response
  CMat q;          // N x N covariance
  CMat q_half;     // Hermitian square root of q
  CMat sigma_bar;  // L_r x L_t LOS path response
  RMat gain_mat;   // L_r x L_t NLOS standard deviations
  CMat h_bar;      // M x N mean channel F^H Sigma_bar G
  double noise_power = 1.0;

  static DeProblem build(const Scenario& scenario, const ScsiState& scsi, const Apv& apv_t,
                         const Apv& apv_r, const CovMatrix& q);
};

struct DeState;

struct DeOptions {
  /// Bound on the relative sweep-to-sweep change of Theta and Theta~.
  double tol = 1e-8;
  int max_iters = 200;
  /// Weight of the previous Phi / Phi~ iterate in each update (0 = none).
  double damping = 0.0;
  /// Anderson mixing depth over the (Phi, Phi~) iterates; 0 = plain sweeps.
  int anderson_memory = 3;
  /// Optional converged state of a nearby probe to start from.
  const DeState* warm_start = nullptr;
};

/// Fixed-point matrices of the DE.
///
/// Theta and Theta~ are negative definite at the fixed point; Phi and Phi~
/// are positive definite. `residual` is the relative max-entry change of
/// (Theta, Theta~) in the last sweep.
struct DeState {
  CMat phi;          // N x N
  CMat phi_tilde;    // M x M
  CMat theta;        // N x N
  CMat theta_tilde;  // M x M
  CMat gamma_tilde;  // L_t x L_t
  CMat gamma;        // L_r x L_r
  int iterations_used = 0;
  double residual = 0.0;
  bool converged = false;
  // Plain sweeps contract monotonically; Anderson steps may briefly raise it.
  std::vector<double> residual_trace;
};

/// eta(Theta~) = Diag{ M^T Diag{F Theta~ F^H} M }, an L_t x L_t diagonal matrix.
CMat eta_map(const CMat& theta_tilde, const CMat& f, const RMat& gain_mat);

/// eta~(Theta) = Diag{ M Diag{G Q^{1/2} Theta Q^{1/2} G^H} M^T }, L_r x L_r diagonal.
CMat eta_tilde_map(const CMat& theta, const CMat& g, const CMat& q_half, const RMat& gain_mat);

/// Runs the coupled fixed-point sweeps from Phi = I, Phi~ = I (or the warm
/// start) and then forms Gamma~ and Gamma. One sweep updates, in order,
/// Theta, Phi~, Theta~, Phi; Anderson mixing extrapolates (Phi, Phi~) between
/// sweeps and restarts whenever the residual grows. Non-convergence is
/// reported through `converged`, not thrown.
DeState de_fixed_point(const DeProblem& problem, const DeOptions& options = {});

/// Transmit-side DE rate in bits:
/// log det(I + G^H Gamma~ G Q) + log det(Phi~) - tr(sigma^2 (I - Phi~) Theta~).
double de_rate_tx(const DeState& state, const DeProblem& problem);

/// Receive-side DE rate in bits:
/// log det(I + F^H Gamma F) + log det(Phi) - tr(sigma^2 (I - Phi) Theta).
double de_rate_rx(const DeState& state, const DeProblem& problem);

/// G^H Gamma~ G, the effective transmit channel seen by the covariance design.
CMat effective_tx_channel(const DeState& state, const DeProblem& problem);

/// Convenience wrapper: fixed point plus transmit-side rate.
double de_rate(const Scenario& scenario, const ScsiState& scsi, const Apv& apv_t,
               const Apv& apv_r, const CovMatrix& q, const DeOptions& options = {});

}  // namespace maee
