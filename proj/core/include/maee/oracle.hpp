// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "maee/scenario.hpp"

namespace maee {

/// Hermitian PSD transmit covariance. Construction validates the matrix:
/// Hermitian within 1e-10 (relative), eigenvalues >= -1e-10 (relative),
/// after which negative eigenvalues are clipped to zero.
class CovMatrix {
 public:
  CovMatrix() = default;
  explicit CovMatrix(const CMat& q);

  static CovMatrix zero(int n);
  static CovMatrix scaled_identity(int n, double per_antenna_power);
  /// U diag(powers) U^H; powers must be nonnegative.
  static CovMatrix from_eigen(const CMat& u, const RVec& powers);

  const CMat& matrix() const { return q_; }
  int dim() const { return static_cast<int>(q_.rows()); }
  double trace() const { return q_.trace().real(); }
  /// Hermitian PSD square root (Q^{1/2} = Q^{H/2}).
  CMat sqrt() const;
  /// Eigenvalues in descending order.
  RVec eigenvalues() const;
  bool budget_feasible(double p_max) const { return trace() <= p_max + 1e-9; }

 private:
  CMat q_;
};

struct RateEstimate {
  double mean = 0.0;     // bits per channel use
  double std_err = 0.0;  // bits per channel use
  long n_samples = 0;
};

/// Sample mean of log2 det(I + H Q H^H / sigma^2) over i.i.d. NLOS draws.
/// Samples are generated in fixed-size chunks with derived seeds, so the
/// estimate does not depend on the number of worker threads.
RateEstimate mc_average_rate(const Scenario& scenario, const ScsiState& scsi, const Apv& apv_t,
                             const Apv& apv_r, const CovMatrix& q, long n_samples,
                             std::uint64_t seed);

/// Per-sample rate log2 det(I + H Q H^H / sigma^2) for a given channel.
double instantaneous_rate(const CMat& h, const CMat& q, double noise_power);

/// omega tr(Q) + N P_c + P_s.
double total_power(const CovMatrix& q, const Scenario& scenario);

/// rate / total_power.
double energy_efficiency(double rate, const CovMatrix& q, const Scenario& scenario);

}  // namespace maee
