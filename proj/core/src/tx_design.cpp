// SPDX-License-Identifier: Apache-2.0
#include "maee/tx_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "maee/linalg.hpp"
#include "maee/parallel.hpp"
#include "sca_loop.hpp"

namespace maee {

EigenChannel EigenChannel::from_matrix(const CMat& a) {
  if (a.rows() != a.cols()) throw DimensionError("effective channel must be square");
  Eigen::SelfAdjointEigenSolver<CMat> es(linalg::symmetrize(a));
  if (es.info() != Eigen::Success) throw NumericalError("eigen-decomposition failed");
  EigenChannel e;
  e.lambdas = es.eigenvalues().reverse().cwiseMax(0.0);
  e.u = es.eigenvectors().rowwise().reverse();
  return e;
}

namespace {

std::vector<bool> usable_modes(const RVec& lambdas) {
  const double top = lambdas.size() > 0 ? lambdas.maxCoeff() : 0.0;
  std::vector<bool> use(static_cast<std::size_t>(lambdas.size()));
  for (Eigen::Index i = 0; i < lambdas.size(); ++i)
    use[i] = top > 0.0 && lambdas(i) > 1e-12 * top;
  return use;
}

// Powers [level - 1/lambda_i]^+ over the usable modes.
RVec fill_at(const RVec& lambdas, const std::vector<bool>& use, double level) {
  RVec p = RVec::Zero(lambdas.size());
  for (Eigen::Index i = 0; i < lambdas.size(); ++i)
    if (use[i]) p(i) = std::max(0.0, level - 1.0 / lambdas(i));
  return p;
}

double frozen_rate(const RVec& lambdas, const RVec& p) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) r += std::log1p(lambdas(i) * p(i));
  return r / linalg::kLn2;
}

double frozen_power(const RVec& p, const Scenario& sc) {
  return sc.amp_eff * p.sum() + sc.n_tx * sc.p_circuit + sc.p_static;
}

}  // namespace

double water_level(const RVec& lambdas, double p_max) {
  if (!(p_max > 0.0)) throw ConfigError("water-filling needs p_max > 0");
  const auto use = usable_modes(lambdas);
  if (std::none_of(use.begin(), use.end(), [](bool b) { return b; }))
    throw NumericalError("rankless channel");
  double lo = 0.0;
  double hi = p_max;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i)
    if (use[i]) hi = std::max(hi, p_max + 1.0 / lambdas(i));
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (fill_at(lambdas, use, mid).sum() > p_max ? hi : lo) = mid;
  }
  // Close the bisection exactly on the active set it identified.
  const double guess = 0.5 * (lo + hi);
  double inv_sum = 0.0;
  int active = 0;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    if (use[i] && guess > 1.0 / lambdas(i)) {
      inv_sum += 1.0 / lambdas(i);
      ++active;
    }
  }
  if (active == 0) return guess;
  const double exact = (p_max + inv_sum) / active;
  const RVec p = fill_at(lambdas, use, exact);
  return std::abs(p.sum() - p_max) <= std::abs(fill_at(lambdas, use, guess).sum() - p_max)
             ? exact
             : guess;
}

RVec waterfill_powers(const RVec& lambdas, double p_max) {
  return fill_at(lambdas, usable_modes(lambdas), water_level(lambdas, p_max));
}

CovMatrix waterfill(const EigenChannel& eigen, double p_max) {
  return CovMatrix::from_eigen(eigen.u, waterfill_powers(eigen.lambdas, p_max));
}

DinkelbachResult dinkelbach_q(const EigenChannel& eigen, const Scenario& sc, double tol,
                              int max_iters) {
  if (tol <= 0.0 || max_iters < 1) throw ConfigError("Dinkelbach tol and max_iters must be positive");
  const auto n = eigen.lambdas.size();
  DinkelbachResult res;
  const auto use = usable_modes(eigen.lambdas);
  if (std::none_of(use.begin(), use.end(), [](bool b) { return b; })) {
    res.q = CovMatrix::zero(static_cast<int>(n));
    res.eta_trace.push_back(0.0);
    res.converged = true;
    return res;
  }
  RVec p = RVec::Constant(n, std::max(sc.p_max, 1e-3) / static_cast<double>(n));
  double eta = frozen_rate(eigen.lambdas, p) / frozen_power(p, sc);
  res.eta_trace.push_back(eta);
  for (int k = 1; k <= max_iters; ++k) {
    res.iterations = k;
    p = fill_at(eigen.lambdas, use, 1.0 / (eta * sc.amp_eff * linalg::kLn2));
    const double r = frozen_rate(eigen.lambdas, p);
    const double pt = frozen_power(p, sc);
    const double gap = r - eta * pt;
    if (gap <= tol) {
      res.converged = true;
      break;
    }
    eta = r / pt;
    res.eta_trace.push_back(eta);
  }
  res.q = CovMatrix::from_eigen(eigen.u, p);
  return res;
}

DeEvaluation evaluate_de(const Scenario& sc, const ScsiState& scsi, const Apv& apv_t,
                         const Apv& apv_r, const CovMatrix& q, const DeOptions& options) {
  const DeProblem prob = DeProblem::build(sc, scsi, apv_t, apv_r, q);
  DeEvaluation out;
  out.de = de_fixed_point(prob, options);
  if (!out.de.converged) {
    DeOptions retry = options;
    retry.warm_start = nullptr;
    retry.anderson_memory = 1;
    retry.max_iters = std::max(2000, options.max_iters);
    out.de = de_fixed_point(prob, retry);
    if (!out.de.converged) {
      std::ostringstream os;
      os << "DE fixed point did not converge (residual " << out.de.residual << ")";
      throw NumericalError(os.str());
    }
  }
  out.rate = de_rate_tx(out.de, prob);
  if (out.rate < -1e-9) throw NumericalError("negative DE rate");
  out.rate = std::max(0.0, out.rate);
  out.ee = energy_efficiency(out.rate, q, sc);
  return out;
}

InnerQResult inner_q(const Scenario& sc, const ScsiState& scsi, const Apv& apv_t,
                     const Apv& apv_r, const InnerQOptions& options, const CovMatrix* q_start,
                     const DeState* warm) {
  const int n = static_cast<int>(apv_t.size());
  DeOptions de = options.de;
  de.warm_start = warm;
  InnerQResult res;
  // Uniform full-budget start. At very high SNR the DE contracts too slowly
  // to converge there, so the start power backs off until it does.
  double p0 = sc.p_max;
  for (int backoff = 0;; ++backoff) {
    res.q = CovMatrix::scaled_identity(n, p0 / n);
    try {
      res.eval = evaluate_de(sc, scsi, apv_t, apv_r, res.q, de);
      break;
    } catch (const NumericalError&) {
      if (backoff == 40) throw;
      p0 *= 0.1;
    }
  }
  if (q_start != nullptr && q_start->dim() == n && q_start->budget_feasible(sc.p_max)) {
    de.warm_start = &res.eval.de;
    DeEvaluation e = evaluate_de(sc, scsi, apv_t, apv_r, *q_start, de);
    if (e.ee > res.eval.ee) {
      res.q = *q_start;
      res.eval = std::move(e);
    }
  }
  res.ee_trace.push_back(res.eval.ee);
  const CMat g = field_response_tx(apv_t, scsi.tx_angles);

  bool done = false;
  for (int k = 0; k < options.max_refresh && !done; ++k) {
    const EigenChannel eig =
        EigenChannel::from_matrix(g.adjoint() * res.eval.de.gamma_tilde * g);
    if (!(eig.lambdas.size() > 0 && eig.lambdas.maxCoeff() > 0.0)) break;
    const DinkelbachResult dk = dinkelbach_q(eig, sc, options.dinkelbach_tol);
    const bool over = dk.q.trace() > sc.p_max;
    const CovMatrix target = over ? waterfill(eig, sc.p_max) : dk.q;

    DeOptions probe = options.de;
    probe.warm_start = &res.eval.de;
    bool improved = false;
    double s = 1.0;
    for (int ls = 0; ls < 30 && !improved; ++ls, s *= 0.5) {
      CovMatrix q_s((1.0 - s) * res.q.matrix() + s * target.matrix());
      DeEvaluation e;
      try {
        e = evaluate_de(sc, scsi, apv_t, apv_r, q_s, probe);
      } catch (const NumericalError&) {
        continue;
      }
      if (e.ee > res.eval.ee) {
        const double gain = e.ee - res.eval.ee;
        res.q = std::move(q_s);
        res.eval = std::move(e);
        res.budget_active = over && res.q.trace() >= sc.p_max * (1.0 - 1e-9);
        res.ee_trace.push_back(res.eval.ee);
        ++res.refreshes;
        improved = true;
        done = gain <= options.rel_tol * res.eval.ee;
      }
    }
    done = done || !improved;
  }
  return res;
}

InnerQResult ee_of_t_full(const Apv& apv_t, const TxContext& ctx, const InnerQResult* warm) {
  return inner_q(ctx.scenario, ctx.scsi, apv_t, ctx.apv_r, ctx.inner,
                 warm != nullptr ? &warm->q : nullptr, warm != nullptr ? &warm->eval.de : nullptr);
}

double ee_of_t(const Apv& apv_t, const TxContext& ctx) { return ee_of_t_full(apv_t, ctx).eval.ee; }

RVec fd_gradient(const std::function<double(const RVec&)>& objective, const RVec& x, double eps1,
                 const double* f_x, unsigned workers) {
  if (!(eps1 > 0.0)) throw ConfigError("eps1 must be positive");
  const double f0 = f_x != nullptr ? *f_x : objective(x);
  RVec grad(x.size());
  parallel_for(
      static_cast<std::size_t>(x.size()),
      [&](std::size_t i) {
        RVec probe = x;
        probe(static_cast<Eigen::Index>(i)) += eps1;
        grad(static_cast<Eigen::Index>(i)) = (objective(probe) - f0) / eps1;
      },
      workers);
  return grad;
}

std::vector<LinearInequality> linearize_min_distance(const Apv& ref, double min_dist) {
  const auto n = ref.size();
  std::vector<LinearInequality> out;
  out.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = ref[i].x - ref[j].x;
      const double dy = ref[i].y - ref[j].y;
      const double len = std::hypot(dx, dy);
      if (!(len > 0.0)) throw NumericalError("coincident reference antennas");
      LinearInequality c;
      c.a = RVec::Zero(static_cast<Eigen::Index>(2 * n));
      c.a(2 * i) = dx / len;
      c.a(2 * i + 1) = dy / len;
      c.a(2 * j) = -dx / len;
      c.a(2 * j + 1) = -dy / len;
      c.b = min_dist;
      out.push_back(std::move(c));
    }
  }
  return out;
}

RVec clamp_to_region(const RVec& stacked, double side) {
  return stacked.cwiseMax(-0.5 * side).cwiseMin(0.5 * side);
}

bool satisfies(const std::vector<LinearInequality>& ineq, const RVec& x, double tol) {
  return std::all_of(ineq.begin(), ineq.end(),
                     [&](const LinearInequality& c) { return c.a.dot(x) >= c.b - tol; });
}

ScaParams tx_sca_params(const SolverParams& sp) {
  ScaParams p;
  p.delta = sp.delta_t;
  p.eps1 = sp.eps1;
  p.eps2 = sp.eps2;
  p.tau0 = sp.tau0;
  p.tau = sp.tau;
  p.xi = sp.xi;
  p.max_iters = sp.l_t_hat;
  p.absolute_shortcut = sp.absolute_tx_shortcut;
  p.quadratic_armijo = sp.quadratic_armijo;
  return p;
}

ScaParams rx_sca_params(const SolverParams& sp) {
  ScaParams p = tx_sca_params(sp);
  p.delta = sp.delta_r;
  p.max_iters = sp.l_r_hat;
  p.absolute_shortcut = false;
  return p;
}

namespace {

// Maximizer of the proximal linear model grad^T (x - x_k) - delta ||x - x_k||^2
// over the region and the linearized distance constraints at x_k.
detail::Proposal gradient_proposal(const RVec& grad, const RVec& xk, double side, double dmin,
                                   const ScaParams& params) {
  const RVec shortcut = params.absolute_shortcut
                            ? clamp_to_region(grad / (2.0 * params.delta), side)
                            : clamp_to_region(xk + grad / (2.0 * params.delta), side);
  const auto ineq = linearize_min_distance(Apv::from_stacked(xk), dmin);
  detail::Proposal prop;
  if (satisfies(ineq, shortcut)) {
    prop.target = shortcut;
  } else {
    const auto n = xk.size();
    QpProblem qp;
    qp.quad = -2.0 * params.delta * RMat::Identity(n, n);
    qp.lin = grad + 2.0 * params.delta * xk;
    qp.ineq = ineq;
    qp.lo = RVec::Constant(n, -0.5 * side);
    qp.hi = RVec::Constant(n, 0.5 * side);
    prop.target = solve_qp(qp, xk).x;
    prop.used_qp = true;
  }
  prop.slope = grad.dot(prop.target - xk);
  return prop;
}

}  // namespace

ScaReport sca_maximize(const std::function<double(const RVec&)>& objective, const Apv& x0,
                       double side, double min_dist, const ScaParams& params) {
  if (!x0.feasible(side, min_dist)) throw ConfigError("initial APV is infeasible");
  if (!(params.delta > 0.0)) throw ConfigError("delta must be positive");
  struct None {};
  using Point = detail::ScaPoint<None>;
  Point start{x0.stacked(), objective(x0.stacked()), {}};
  auto evaluate = [&](const RVec& x, const Point&) { return Point{x, objective(x), {}}; };
  auto propose = [&](const Point& pt) {
    return gradient_proposal(fd_gradient(objective, pt.x, params.eps1, &pt.value), pt.x, side,
                             min_dist, params);
  };
  auto admit = [&](RVec& x) {
    x = clamp_to_region(x, side);
    return Apv::from_stacked(x).feasible(side, min_dist);
  };
  auto run = detail::run_sca(std::move(start), params, propose, evaluate, admit);
  ScaReport rep;
  rep.apv = Apv::from_stacked(run.last.x);
  rep.value = run.last.value;
  rep.trace = std::move(run.trace);
  rep.step_sizes = std::move(run.steps);
  rep.iterations = run.iterations;
  rep.qp_calls = run.qp_calls;
  rep.line_search_exhausted = run.exhausted;
  return rep;
}

TxSolveReport sca_optimize_tx(const TxContext& ctx, const Apv& apv_t0, const ScaParams& params,
                              const CovMatrix* q_start) {
  const double side = ctx.scenario.region_tx;
  const double dmin = ctx.scenario.min_dist;
  if (!apv_t0.feasible(side, dmin)) throw ConfigError("initial transmit APV is infeasible");
  if (!(params.delta > 0.0)) throw ConfigError("delta_t must be positive");

  TxSolveReport report;
  using Point = detail::ScaPoint<InnerQResult>;
  Point start;
  start.x = apv_t0.stacked();
  start.payload = inner_q(ctx.scenario, ctx.scsi, apv_t0, ctx.apv_r, ctx.inner, q_start);
  start.value = start.payload.eval.ee;
  report.inner_iters += start.payload.refreshes;

  auto evaluate = [&](const RVec& x, const Point& warm) {
    Point pt;
    pt.x = x;
    try {
      pt.payload = ee_of_t_full(Apv::from_stacked(x), ctx, &warm.payload);
      pt.value = pt.payload.eval.ee;
      report.inner_iters += pt.payload.refreshes;
    } catch (const NumericalError&) {
      pt.value = -std::numeric_limits<double>::infinity();
    }
    return pt;
  };
  auto propose = [&](const Point& pt) {
    auto f = [&](const RVec& x) { return ee_of_t_full(Apv::from_stacked(x), ctx, &pt.payload).eval.ee; };
    return gradient_proposal(fd_gradient(f, pt.x, params.eps1, &pt.value), pt.x, side, dmin, params);
  };
  auto admit = [&](RVec& x) {
    x = clamp_to_region(x, side);
    return Apv::from_stacked(x).feasible(side, dmin);
  };

  auto run = detail::run_sca(std::move(start), params, propose, evaluate, admit);
  report.apv_t = Apv::from_stacked(run.last.x);
  report.q = run.last.payload.q;
  report.eval = run.last.payload.eval;
  report.ee_trace = std::move(run.trace);
  report.step_sizes = std::move(run.steps);
  report.outer_iters = run.iterations;
  report.qp_calls = run.qp_calls;
  report.line_search_exhausted = run.exhausted;
  return report;
}

}  // namespace maee
