// SPDX-License-Identifier: Apache-2.0
#include "maee/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "maee/linalg.hpp"
#include "maee/parallel.hpp"

namespace maee {

CovMatrix::CovMatrix(const CMat& q) {
  if (q.rows() != q.cols()) throw DimensionError("covariance must be square");
  if (linalg::hermitian_defect(q) > 1e-10) throw NumericalError("covariance is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMat> es(linalg::symmetrize(q));
  const RVec& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.size() > 0 && ev.minCoeff() < -1e-10 * scale) {
    std::ostringstream os;
    os << "covariance is indefinite (min eigenvalue " << ev.minCoeff() << ")";
    throw NumericalError(os.str());
  }
  if (ev.size() > 0 && ev.minCoeff() < 0.0)
    q_ = es.eigenvectors() * ev.cwiseMax(0.0).asDiagonal() * es.eigenvectors().adjoint();
  else
    q_ = linalg::symmetrize(q);
}

CovMatrix CovMatrix::zero(int n) { return CovMatrix(CMat::Zero(n, n)); }

CovMatrix CovMatrix::scaled_identity(int n, double per_antenna_power) {
  return CovMatrix(per_antenna_power * CMat::Identity(n, n));
}

CovMatrix CovMatrix::from_eigen(const CMat& u, const RVec& powers) {
  if (powers.size() > 0 && powers.minCoeff() < 0.0)
    throw NumericalError("negative power in eigen-allocation");
  return CovMatrix(u * powers.cast<cplx>().asDiagonal() * u.adjoint());
}

CMat CovMatrix::sqrt() const { return linalg::psd_sqrt(q_); }

RVec CovMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<CMat> es(q_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

double instantaneous_rate(const CMat& h, const CMat& q, double noise_power) {
  const auto m = h.rows();
  CMat a = CMat::Identity(m, m) + (h * q * h.adjoint()) / noise_power;
  return linalg::logdet_chol(a) / linalg::kLn2;
}

namespace {

constexpr long kChunk = 4096;

struct RunningStats {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const RunningStats& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }
};

}  // namespace

RateEstimate mc_average_rate(const Scenario& scenario, const ScsiState& scsi, const Apv& apv_t,
                             const Apv& apv_r, const CovMatrix& q, long n_samples,
                             std::uint64_t seed) {
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (q.dim() != static_cast<int>(apv_t.size()))
    throw DimensionError("covariance dimension does not match the transmit APV");
  const CMat g = field_response_tx(apv_t, scsi.tx_angles);
  const CMat f = field_response_rx(apv_r, scsi.rx_angles);
  const long chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<RunningStats> parts(static_cast<std::size_t>(chunks));
  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    Rng rng(derive_seed(seed, c));
    const long begin = static_cast<long>(c) * kChunk;
    const long end = std::min(n_samples, begin + kChunk);
    RunningStats& st = parts[c];
    for (long i = begin; i < end; ++i) {
      const CMat h = sample_channel(scsi, g, f, rng);
      st.push(instantaneous_rate(h, q.matrix(), scenario.noise_power));
    }
  });
  RunningStats all;
  for (const auto& p : parts) all.merge(p);
  RateEstimate est;
  est.n_samples = all.n;
  est.mean = all.mean;
  est.std_err = all.n > 1 ? std::sqrt(all.m2 / static_cast<double>(all.n - 1) /
                                      static_cast<double>(all.n))
                          : 0.0;
  return est;
}

double total_power(const CovMatrix& q, const Scenario& scenario) {
  return scenario.amp_eff * q.trace() + scenario.n_tx * scenario.p_circuit + scenario.p_static;
}

double energy_efficiency(double rate, const CovMatrix& q, const Scenario& scenario) {
  if (rate < 0.0) throw NumericalError("negative rate passed to energy_efficiency");
  return rate / total_power(q, scenario);
}

}  // namespace maee
