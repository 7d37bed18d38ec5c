// SPDX-License-Identifier: Apache-2.0
#include "maee/rx_design.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "maee/linalg.hpp"
#include "sca_loop.hpp"

namespace maee {
namespace {

// B = Delta E_kk + E_kk Delta^H for antenna k.
CMat coordinate_block(const CMat& delta, Eigen::Index k) {
  const auto m = delta.rows();
  CMat b = CMat::Zero(m, m);
  b.col(k) += delta.col(k);
  b.row(k) += delta.col(k).adjoint();
  return b;
}

double real_part_checked(cplx v, double tol, const char* what) {
  if (std::abs(v.imag()) > tol * std::max(1.0, std::abs(v.real()))) {
    std::ostringstream os;
    os << what << ": imaginary residue " << v.imag();
    throw NumericalError(os.str());
  }
  return v.real();
}

}  // namespace

RxSurrogate build_rx_surrogate(const DeProblem& p, const DeState& st, const ScsiState& scsi,
                               const Apv& r_ref, double delta_r) {
  if (!(delta_r > 0.0)) throw ConfigError("delta_r must be positive");
  const auto m = p.f.cols();
  if (static_cast<std::size_t>(m) != r_ref.size())
    throw DimensionError("reference APV does not match the receive field response");
  const auto lr = p.f.rows();
  RVec ax(lr);
  RVec ay(lr);
  for (Eigen::Index l = 0; l < lr; ++l) {
    const auto& a = scsi.rx_angles[static_cast<std::size_t>(l)];
    ax(l) = std::sin(a.theta) * std::cos(a.phi);
    ay(l) = std::cos(a.theta);
  }
  const cplx j2pi(0.0, 2.0 * std::numbers::pi);
  RxSurrogate s;
  s.r_ref = r_ref;
  s.delta_r = delta_r;
  s.base_rate = de_rate_rx(st, p);
  const CMat fg = p.f.adjoint() * st.gamma;
  s.delta_x = j2pi * fg * ax.cast<cplx>().asDiagonal() * p.f;
  s.delta_y = j2pi * fg * ay.cast<cplx>().asDiagonal() * p.f;
  s.e_mat = linalg::symmetrize(
      linalg::checked_inverse(CMat::Identity(m, m) + fg * p.f, "I + F^H Gamma F"));

  std::vector<CMat> eb;
  eb.reserve(static_cast<std::size_t>(2 * m));
  for (Eigen::Index k = 0; k < m; ++k) {
    eb.push_back(s.e_mat * coordinate_block(s.delta_x, k));
    eb.push_back(s.e_mat * coordinate_block(s.delta_y, k));
  }
  const auto n = static_cast<Eigen::Index>(eb.size());
  s.lin.resize(n);
  s.curv.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    s.lin(a) = eb[a].trace().real() / linalg::kLn2;
    for (Eigen::Index b = a; b < n; ++b) {
      // tr(X Y) without forming the product.
      const double v = (eb[a].transpose().cwiseProduct(eb[b])).sum().real() / linalg::kLn2;
      s.curv(a, b) = v;
      s.curv(b, a) = v;
    }
  }
  return s;
}

RxSurrogate build_rx_surrogate(const Scenario& sc, const ScsiState& scsi, const Apv& apv_t,
                               const Apv& r_ref, const CovMatrix& q, double delta_r,
                               const DeOptions& options) {
  const DeProblem p = DeProblem::build(sc, scsi, apv_t, r_ref, q);
  const DeState st = de_fixed_point(p, options);
  if (!st.converged) throw NumericalError("DE fixed point did not converge at the reference");
  return build_rx_surrogate(p, st, scsi, r_ref, delta_r);
}

double rx_surrogate_value(const RxSurrogate& s, const Apv& apv_r) {
  if (apv_r.size() != s.r_ref.size()) throw DimensionError("APV size does not match the surrogate");
  const auto m = s.e_mat.rows();
  CMat j = CMat::Zero(m, m);
  double prox = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double dx = apv_r[k].x - s.r_ref[k].x;
    const double dy = apv_r[k].y - s.r_ref[k].y;
    j += dx * coordinate_block(s.delta_x, k) + dy * coordinate_block(s.delta_y, k);
    prox += dx * dx + dy * dy;
  }
  const CMat ej = s.e_mat * j;
  const double first = real_part_checked(ej.trace(), 1e-9, "tr(E J)");
  const double second = real_part_checked((ej * ej).trace(), 1e-9, "tr(E J E J)");
  return s.base_rate + (first - second) / linalg::kLn2 - s.delta_r * prox;
}

double rx_surrogate_quadratic(const RxSurrogate& s, const RVec& d) {
  return s.base_rate + s.lin.dot(d) - d.dot(s.curv * d) - s.delta_r * d.squaredNorm();
}

Apv solve_rx_unconstrained(const RxSurrogate& s) {
  const auto n = s.lin.size();
  const RMat h = 2.0 * (s.curv + s.delta_r * RMat::Identity(n, n));
  Eigen::LLT<RMat> llt(h);
  if (llt.info() != Eigen::Success) throw NumericalError("receive surrogate system is singular");
  const RVec d = llt.solve(s.lin);
  return Apv::from_stacked(s.r_ref.stacked() + d);
}

RxEvaluation rate_of_r(const Apv& apv_r, const RxContext& ctx, const DeState* warm) {
  const DeProblem p = DeProblem::build(ctx.scenario, ctx.scsi, ctx.apv_t, apv_r, ctx.q);
  DeOptions o = ctx.de;
  o.warm_start = warm;
  RxEvaluation out;
  out.de = de_fixed_point(p, o);
  if (!out.de.converged) {
    o.warm_start = nullptr;
    o.anderson_memory = 1;
    o.max_iters = std::max(2000, o.max_iters);
    out.de = de_fixed_point(p, o);
    if (!out.de.converged) throw NumericalError("DE fixed point did not converge");
  }
  out.rate = de_rate_rx(out.de, p);
  return out;
}

RxSolveReport sca_optimize_rx(const RxContext& ctx, const Apv& apv_r0, const ScaParams& params) {
  const double side = ctx.scenario.region_rx;
  const double dmin = ctx.scenario.min_dist;
  if (!apv_r0.feasible(side, dmin)) throw ConfigError("initial receive APV is infeasible");
  if (!(params.delta > 0.0)) throw ConfigError("delta_r must be positive");

  using Point = detail::ScaPoint<RxEvaluation>;
  Point start;
  start.x = apv_r0.stacked();
  start.payload = rate_of_r(apv_r0, ctx);
  start.value = start.payload.rate;

  auto evaluate = [&](const RVec& x, const Point& warm) {
    Point pt;
    pt.x = x;
    try {
      pt.payload = rate_of_r(Apv::from_stacked(x), ctx, &warm.payload.de);
      pt.value = pt.payload.rate;
    } catch (const NumericalError&) {
      pt.value = -std::numeric_limits<double>::infinity();
    }
    return pt;
  };
  auto propose = [&](const Point& pt) {
    const Apv ref = Apv::from_stacked(pt.x);
    const DeProblem prob = DeProblem::build(ctx.scenario, ctx.scsi, ctx.apv_t, ref, ctx.q);
    const RxSurrogate s = build_rx_surrogate(prob, pt.payload.de, ctx.scsi, ref, params.delta);
    detail::Proposal prop;
    prop.target = solve_rx_unconstrained(s).stacked();
    const auto ineq = linearize_min_distance(ref, dmin);
    const bool in_box = (prop.target.cwiseAbs().array() <= 0.5 * side).all();
    if (!in_box || !satisfies(ineq, prop.target)) {
      const auto n = pt.x.size();
      QpProblem qp;
      qp.quad = -2.0 * (s.curv + params.delta * RMat::Identity(n, n));
      qp.lin = s.lin - qp.quad * pt.x;
      qp.ineq = ineq;
      qp.lo = RVec::Constant(n, -0.5 * side);
      qp.hi = RVec::Constant(n, 0.5 * side);
      prop.target = solve_qp(qp, pt.x).x;
      prop.used_qp = true;
    }
    prop.slope = s.lin.dot(prop.target - pt.x);
    return prop;
  };
  auto admit = [&](RVec& x) {
    x = clamp_to_region(x, side);
    return Apv::from_stacked(x).feasible(side, dmin);
  };

  auto run = detail::run_sca(std::move(start), params, propose, evaluate, admit);
  RxSolveReport report;
  report.apv_r = Apv::from_stacked(run.last.x);
  report.eval = std::move(run.last.payload);
  report.rate_trace = std::move(run.trace);
  report.step_sizes = std::move(run.steps);
  report.iterations = run.iterations;
  report.qp_calls = run.qp_calls;
  report.line_search_exhausted = run.exhausted;
  return report;
}

}  // namespace maee
