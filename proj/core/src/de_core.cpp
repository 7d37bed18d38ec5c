// SPDX-License-Identifier: Apache-2.0
#include "maee/de_core.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "maee/linalg.hpp"

namespace maee {
namespace {

double max_abs(const CMat& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

double relative_change(const CMat& now, const CMat& before) {
  const double scale = std::max(max_abs(now), std::numeric_limits<double>::min());
  return max_abs(now - before) / scale;
}

double real_trace(const CMat& a, const char* what) {
  const cplx tr = a.trace();
  if (std::abs(tr.imag()) > 1e-8 * std::max(1.0, std::abs(tr.real()))) {
    std::ostringstream os;
    os << what << ": trace has imaginary residue " << tr.imag();
    throw NumericalError(os.str());
  }
  return tr.real();
}

}  // namespace

DeProblem DeProblem::build(const Scenario& scenario, const ScsiState& scsi, const Apv& apv_t,
                           const Apv& apv_r, const CovMatrix& q) {
  if (q.dim() != static_cast<int>(apv_t.size()))
    throw DimensionError("covariance dimension does not match the transmit APV");
  DeProblem p;
  p.g = field_response_tx(apv_t, scsi.tx_angles);
  p.f = field_response_rx(apv_r, scsi.rx_angles);
  p.q = q.matrix();
  p.q_half = q.sqrt();
  p.sigma_bar = scsi.sigma_bar;
  p.gain_mat = scsi.gain_mat;
  if (p.sigma_bar.rows() != p.f.rows() || p.sigma_bar.cols() != p.g.rows())
    throw DimensionError("path-response dimensions do not match the field responses");
  p.h_bar = p.f.adjoint() * p.sigma_bar * p.g;
  p.noise_power = scenario.noise_power;
  return p;
}

CMat eta_map(const CMat& theta_tilde, const CMat& f, const RMat& gain_mat) {
  if (theta_tilde.rows() != f.cols() || f.rows() != gain_mat.rows())
    throw DimensionError("eta_map: dimension mismatch");
  const CVec d = (f * theta_tilde * f.adjoint()).diagonal();
  const RMat m2 = gain_mat.cwiseAbs2();
  const CVec out = m2.transpose().cast<cplx>() * d;
  return out.asDiagonal();
}

CMat eta_tilde_map(const CMat& theta, const CMat& g, const CMat& q_half, const RMat& gain_mat) {
  if (theta.rows() != q_half.rows() || g.cols() != q_half.rows() || g.rows() != gain_mat.cols())
    throw DimensionError("eta_tilde_map: dimension mismatch");
  const CMat gq = g * q_half;
  const CVec d = (gq * theta * gq.adjoint()).diagonal();
  const RMat m2 = gain_mat.cwiseAbs2();
  const CVec out = m2.cast<cplx>() * d;
  return out.asDiagonal();
}

namespace {

struct Sweep {
  CMat phi;
  CMat phi_tilde;
  CMat theta;
  CMat theta_tilde;
};

// Gauss-Seidel order: Theta, Phi~, Theta~ (from the new Phi~), Phi.
Sweep gs_sweep(const DeProblem& p, const CMat& hq, const CMat& gq, const CMat& phi,
               const CMat& phi_tilde) {
  const auto n = phi.rows();
  const auto m = phi_tilde.rows();
  const double s2 = p.noise_power;
  Sweep s;
  s.theta = linalg::symmetrize(-linalg::checked_inverse(
      s2 * phi + hq.adjoint() * linalg::checked_inverse(phi_tilde, "Phi~") * hq, "Theta inner"));
  s.phi_tilde = linalg::symmetrize(
      CMat::Identity(m, m) - p.f.adjoint() * eta_tilde_map(s.theta, p.g, p.q_half, p.gain_mat) * p.f);
  s.theta_tilde = linalg::symmetrize(-linalg::checked_inverse(
      s2 * s.phi_tilde + hq * linalg::checked_inverse(phi, "Phi") * hq.adjoint(), "Theta~ inner"));
  s.phi = linalg::symmetrize(CMat::Identity(n, n) -
                             gq.adjoint() * eta_map(s.theta_tilde, p.f, p.gain_mat) * gq);
  return s;
}

CVec stack(const CMat& phi, const CMat& phi_tilde) {
  CVec v(phi.size() + phi_tilde.size());
  v.head(phi.size()) = Eigen::Map<const CVec>(phi.data(), phi.size());
  v.tail(phi_tilde.size()) = Eigen::Map<const CVec>(phi_tilde.data(), phi_tilde.size());
  return v;
}

void unstack(const CVec& v, CMat& phi, CMat& phi_tilde) {
  phi = linalg::symmetrize(Eigen::Map<const CMat>(v.data(), phi.rows(), phi.cols()));
  phi_tilde = linalg::symmetrize(
      Eigen::Map<const CMat>(v.data() + phi.size(), phi_tilde.rows(), phi_tilde.cols()));
}

bool positive_definite(const CMat& a) {
  Eigen::LLT<CMat> llt(a);
  return llt.info() == Eigen::Success;
}

}  // namespace

DeState de_fixed_point(const DeProblem& p, const DeOptions& options) {
  if (options.max_iters < 1) throw ConfigError("DE max_iters must be >= 1");
  if (options.anderson_memory < 0) throw ConfigError("DE anderson_memory must be >= 0");
  if (options.damping < 0.0 || options.damping >= 1.0)
    throw ConfigError("DE damping must lie in [0, 1)");
  const auto n = p.q.rows();
  const auto m = p.f.cols();
  const double s2 = p.noise_power;
  const CMat hq = p.h_bar * p.q_half;  // M x N
  const CMat gq = p.g * p.q_half;      // L_t x N

  DeState st;
  st.phi = CMat::Identity(n, n);
  st.phi_tilde = CMat::Identity(m, m);
  st.theta = CMat::Zero(n, n);
  st.theta_tilde = CMat::Zero(m, m);
  bool have_theta = false;
  if (const DeState* w = options.warm_start) {
    if (w->phi.rows() == n && w->phi_tilde.rows() == m && positive_definite(w->phi) &&
        positive_definite(w->phi_tilde)) {
      st.phi = w->phi;
      st.phi_tilde = w->phi_tilde;
      st.theta = w->theta;
      st.theta_tilde = w->theta_tilde;
      have_theta = true;
    }
  }
  st.residual = std::numeric_limits<double>::infinity();

  CMat phi_in = st.phi;
  CMat phi_tilde_in = st.phi_tilde;
  CVec x = stack(phi_in, phi_tilde_in);
  std::deque<CVec> d_f;
  std::deque<CVec> d_g;
  CVec f_prev;
  CVec g_prev;
  double f_norm_prev = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= options.max_iters; ++it) {
    Sweep sw = gs_sweep(p, hq, gq, phi_in, phi_tilde_in);
    if (options.damping > 0.0) {
      sw.phi = (1.0 - options.damping) * sw.phi + options.damping * phi_in;
      sw.phi_tilde = (1.0 - options.damping) * sw.phi_tilde + options.damping * phi_tilde_in;
    }
    const double res = have_theta ? std::max(relative_change(sw.theta, st.theta),
                                             relative_change(sw.theta_tilde, st.theta_tilde))
                                  : std::numeric_limits<double>::infinity();
    have_theta = true;
    st.theta = sw.theta;
    st.theta_tilde = sw.theta_tilde;
    st.phi = sw.phi;
    st.phi_tilde = sw.phi_tilde;
    st.iterations_used = it;
    st.residual = res;
    st.residual_trace.push_back(res);
    if (res < options.tol) {
      st.converged = true;
      break;
    }

    const CVec gx = stack(sw.phi, sw.phi_tilde);
    const CVec f = gx - x;
    const double f_norm = f.norm() / std::max(gx.norm(), std::numeric_limits<double>::min());
    if (f_norm > f_norm_prev) {
      d_f.clear();
      d_g.clear();
      f_prev.resize(0);
    }
    f_norm_prev = f_norm;
    if (options.anderson_memory > 0 && f_prev.size() > 0) {
      d_f.push_back(f - f_prev);
      d_g.push_back(gx - g_prev);
      if (static_cast<int>(d_f.size()) > options.anderson_memory) {
        d_f.pop_front();
        d_g.pop_front();
      }
    }
    f_prev = f;
    g_prev = gx;

    x = gx;
    if (!d_f.empty()) {
      CMat fm(f.size(), static_cast<Eigen::Index>(d_f.size()));
      CMat gm(f.size(), static_cast<Eigen::Index>(d_g.size()));
      for (std::size_t k = 0; k < d_f.size(); ++k) {
        fm.col(static_cast<Eigen::Index>(k)) = d_f[k];
        gm.col(static_cast<Eigen::Index>(k)) = d_g[k];
      }
      const CVec gamma = fm.colPivHouseholderQr().solve(f);
      const CVec x_aa = gx - gm * gamma;
      CMat a(n, n);
      CMat b(m, m);
      unstack(x_aa, a, b);
      if (gamma.allFinite() && positive_definite(a) && positive_definite(b)) {
        x = x_aa;
      } else {
        d_f.clear();
        d_g.clear();
        f_prev.resize(0);
      }
    }
    phi_in.resize(n, n);
    phi_tilde_in.resize(m, m);
    unstack(x, phi_in, phi_tilde_in);
  }

  const CMat phi_tilde_inv = linalg::checked_inverse(st.phi_tilde, "Phi~");
  const CMat phi_inv = linalg::checked_inverse(st.phi, "Phi");
  st.gamma_tilde = linalg::symmetrize(-eta_map(st.theta_tilde, p.f, p.gain_mat) +
                                      p.sigma_bar.adjoint() * p.f * phi_tilde_inv *
                                          p.f.adjoint() * p.sigma_bar / s2);
  st.gamma = linalg::symmetrize(-eta_tilde_map(st.theta, p.g, p.q_half, p.gain_mat) +
                                p.sigma_bar * gq * phi_inv * gq.adjoint() *
                                    p.sigma_bar.adjoint() / s2);
  return st;
}

CMat effective_tx_channel(const DeState& state, const DeProblem& p) {
  return linalg::symmetrize(p.g.adjoint() * state.gamma_tilde * p.g);
}

double de_rate_tx(const DeState& st, const DeProblem& p) {
  const auto n = p.q.rows();
  const auto m = p.f.cols();
  const CMat a = CMat::Identity(n, n) + p.q_half * effective_tx_channel(st, p) * p.q_half;
  const double t1 = linalg::logdet_hermitian(a);
  const double t2 = linalg::logdet_hermitian(st.phi_tilde);
  const double t3 = p.noise_power *
                    real_trace((CMat::Identity(m, m) - st.phi_tilde) * st.theta_tilde, "de_rate_tx");
  return (t1 + t2 - t3) / linalg::kLn2;
}

double de_rate_rx(const DeState& st, const DeProblem& p) {
  const auto n = p.q.rows();
  const auto m = p.f.cols();
  const CMat a = CMat::Identity(m, m) + p.f.adjoint() * st.gamma * p.f;
  const double t1 = linalg::logdet_hermitian(a);
  const double t2 = linalg::logdet_hermitian(st.phi);
  const double t3 =
      p.noise_power * real_trace((CMat::Identity(n, n) - st.phi) * st.theta, "de_rate_rx");
  return (t1 + t2 - t3) / linalg::kLn2;
}

double de_rate(const Scenario& scenario, const ScsiState& scsi, const Apv& apv_t,
               const Apv& apv_r, const CovMatrix& q, const DeOptions& options) {
  const DeProblem p = DeProblem::build(scenario, scsi, apv_t, apv_r, q);
  return de_rate_tx(de_fixed_point(p, options), p);
}

}  // namespace maee
