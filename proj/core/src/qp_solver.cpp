// SPDX-License-Identifier: Apache-2.0
#include "maee/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace maee {

double QpProblem::max_violation(const RVec& x) const {
  double v = 0.0;
  for (const auto& c : ineq) v = std::max(v, c.b - c.a.dot(x));
  return v;
}

void QpProblem::validate() const {
  const auto n = lin.size();
  if (n == 0) throw DimensionError("QP has no variables");
  if (quad.rows() != n || quad.cols() != n) throw DimensionError("QP quad must be n x n");
  if (lo.size() != n || hi.size() != n) throw DimensionError("QP box must have n entries");
  for (const auto& c : ineq)
    if (c.a.size() != n) throw DimensionError("QP inequality has the wrong length");
  const double scale = std::max(1.0, quad.cwiseAbs().maxCoeff());
  if ((quad - quad.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ConfigError("QP quad is not symmetric");
  for (Eigen::Index j = 0; j < n; ++j)
    if (!(lo(j) <= hi(j))) throw ConfigError("QP box has lo > hi");
}

double kkt_residual(const QpProblem& p, const RVec& x, const RVec& lambda) {
  RVec grad = p.quad * x + p.lin;
  double comp = 0.0;
  for (std::size_t i = 0; i < p.ineq.size(); ++i) {
    const auto& c = p.ineq[i];
    const double li = lambda(static_cast<Eigen::Index>(i));
    grad += li * c.a;
    comp = std::max(comp, std::abs(li * (c.a.dot(x) - c.b)));
    comp = std::max(comp, -li);
  }
  const RVec moved = (x + grad).cwiseMax(p.lo).cwiseMin(p.hi);
  return (x - moved).cwiseAbs().maxCoeff() + p.max_violation(x) + comp;
}

namespace {

// Internal minimization form: 0.5 x^T P x - q^T x, A x >= b with unit rows.
struct Scaled {
  RMat p;
  RVec q;
  RMat a;
  RVec b;
  RVec lo;
  RVec hi;
  double obj_scale = 1.0;
  RVec row_norm;
};

RVec clamp(const RVec& x, const RVec& lo, const RVec& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

// Minimizes the augmented Lagrangian over the box by FISTA with gradient restart.
void minimize_al(const Scaled& s, const RVec& lambda, double rho, double lip, RVec& x,
                 int max_inner) {
  RVec y = x;
  RVec x_prev = x;
  double t = 1.0;
  for (int it = 0; it < max_inner; ++it) {
    const RVec mult = (lambda - rho * (s.a * y - s.b)).cwiseMax(0.0);
    const RVec grad = s.p * y - s.q - s.a.transpose() * mult;
    const RVec x_new = clamp(y - grad / lip, s.lo, s.hi);
    const double step = (x_new - y).cwiseAbs().maxCoeff() * lip;
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    RVec y_next = x_new + ((t - 1.0) / t_new) * (x_new - x_prev);
    if ((y - x_new).dot(x_new - x_prev) > 0.0) {
      t = 1.0;
      y_next = x_new;
    } else {
      t = t_new;
    }
    x_prev = x_new;
    y = y_next;
    if (step <= 1e-11) break;
  }
  x = x_prev;
}

// Solves the equality-constrained KKT system of a guessed active set and
// repairs the guess one constraint at a time. Returns false on failure.
bool polish(const Scaled& s, RVec& x, RVec& lambda) {
  const auto n = s.p.rows();
  const auto m = s.a.rows();
  std::vector<int> bound(static_cast<std::size_t>(n), 0);  // -1 lo, +1 hi
  std::vector<bool> active(static_cast<std::size_t>(m), false);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (x(j) - s.lo(j) <= 1e-9) bound[j] = -1;
    else if (s.hi(j) - x(j) <= 1e-9) bound[j] = 1;
  }
  for (Eigen::Index i = 0; i < m; ++i)
    active[i] = lambda(i) > 1e-10 || s.a.row(i).dot(x) - s.b(i) <= 1e-8;

  const int max_changes = static_cast<int>(4 * (n + m) + 10);
  for (int iter = 0; iter < max_changes; ++iter) {
    std::vector<Eigen::Index> fr;
    std::vector<Eigen::Index> wk;
    RVec xs = RVec::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (bound[j] == 0) fr.push_back(j);
      else xs(j) = bound[j] < 0 ? s.lo(j) : s.hi(j);
    }
    for (Eigen::Index i = 0; i < m; ++i)
      if (active[i]) wk.push_back(i);
    const auto nf = static_cast<Eigen::Index>(fr.size());
    const auto nw = static_cast<Eigen::Index>(wk.size());
    RVec lam = RVec::Zero(m);
    if (nf + nw > 0) {
      RMat k = RMat::Zero(nf + nw, nf + nw);
      RVec rhs(nf + nw);
      const RVec px_fixed = s.p * xs;
      const RVec ax_fixed = s.a * xs;
      for (Eigen::Index r = 0; r < nf; ++r) {
        for (Eigen::Index c = 0; c < nf; ++c) k(r, c) = s.p(fr[r], fr[c]);
        for (Eigen::Index c = 0; c < nw; ++c) k(r, nf + c) = -s.a(wk[c], fr[r]);
        rhs(r) = s.q(fr[r]) - px_fixed(fr[r]);
      }
      for (Eigen::Index r = 0; r < nw; ++r) {
        for (Eigen::Index c = 0; c < nf; ++c) k(nf + r, c) = s.a(wk[r], fr[c]);
        rhs(nf + r) = s.b(wk[r]) - ax_fixed(wk[r]);
      }
      Eigen::FullPivLU<RMat> lu(k);
      const RVec sol = lu.solve(rhs);
      if (!sol.allFinite() || (k * sol - rhs).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + rhs.norm()))
        return false;
      for (Eigen::Index r = 0; r < nf; ++r) xs(fr[r]) = sol(r);
      for (Eigen::Index r = 0; r < nw; ++r) lam(wk[r]) = sol(nf + r);
    }
    const RVec mu = s.p * xs - s.q - s.a.transpose() * lam;

    // Worst primal and dual defects of the current guess.
    double worst = 1e-12;
    int kind = 0;  // 1 add ineq, 2 fix var, 3 drop ineq, 4 free var
    Eigen::Index which = -1;
    int side = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (active[i]) {
        if (-lam(i) > worst) { worst = -lam(i); kind = 3; which = i; }
      } else {
        const double v = s.b(i) - s.a.row(i).dot(xs);
        if (v > worst) { worst = v; kind = 1; which = i; }
      }
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (bound[j] == 0) {
        if (s.lo(j) - xs(j) > worst) { worst = s.lo(j) - xs(j); kind = 2; which = j; side = -1; }
        if (xs(j) - s.hi(j) > worst) { worst = xs(j) - s.hi(j); kind = 2; which = j; side = 1; }
      } else {
        const double d = bound[j] < 0 ? -mu(j) : mu(j);
        if (d > worst) { worst = d; kind = 4; which = j; }
      }
    }
    if (kind == 0) {
      x = xs;
      lambda = lam.cwiseMax(0.0);
      return true;
    }
    if (kind == 1) active[which] = true;
    else if (kind == 3) active[which] = false;
    else if (kind == 2) bound[which] = side;
    else bound[which] = 0;
  }
  return false;
}

}  // namespace

QpResult solve_qp(const QpProblem& problem, const RVec& x0, const QpOptions& options) {
  problem.validate();
  const auto n = problem.lin.size();
  if (x0.size() != n) throw DimensionError("QP start point has the wrong length");
  if (options.tol <= 0.0 || options.max_outer < 1 || options.max_inner < 1)
    throw ConfigError("QP options must be positive");

  Scaled s;
  s.obj_scale = problem.quad.cwiseAbs().maxCoeff();
  if (!(s.obj_scale > 0.0)) throw ConfigError("QP objective is not strongly concave");
  s.p = -problem.quad / s.obj_scale;
  s.p = 0.5 * (s.p + s.p.transpose());
  Eigen::SelfAdjointEigenSolver<RMat> es(s.p, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 1e-12 * es.eigenvalues().maxCoeff())
    throw ConfigError("QP objective is not strongly concave");
  const double p_norm = es.eigenvalues().maxCoeff();
  s.q = problem.lin / s.obj_scale;
  s.lo = problem.lo;
  s.hi = problem.hi;

  // Zero rows are either trivially true or infeasible; drop the former.
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < problem.ineq.size(); ++i) {
    const double nrm = problem.ineq[i].a.norm();
    if (nrm > 0.0) kept.push_back(i);
    else if (problem.ineq[i].b > 1e-6) throw InfeasibleError("QP has an unsatisfiable zero row");
  }
  const auto m = static_cast<Eigen::Index>(kept.size());
  s.a.resize(m, n);
  s.b.resize(m);
  s.row_norm.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& c = problem.ineq[kept[i]];
    s.row_norm(i) = c.a.norm();
    s.a.row(i) = c.a.transpose() / s.row_norm(i);
    s.b(i) = c.b / s.row_norm(i);
  }
  double a_norm2 = 0.0;
  if (m > 0) {
    const double sv = Eigen::JacobiSVD<RMat>(s.a).singularValues()(0);
    a_norm2 = sv * sv;
  }

  RVec x = clamp(x0, s.lo, s.hi);
  RVec lambda = RVec::Zero(m);
  double rho = 1e2;
  double prev_viol = std::numeric_limits<double>::infinity();
  int stalls_at_max = 0;
  int outer = 0;
  for (outer = 1; outer <= options.max_outer; ++outer) {
    if (m == 0) {
      minimize_al(s, lambda, 0.0, p_norm, x, options.max_inner);
      break;
    }
    minimize_al(s, lambda, rho, p_norm + rho * a_norm2, x, options.max_inner);
    const double viol = std::max(0.0, (s.b - s.a * x).maxCoeff());
    lambda = (lambda - rho * (s.a * x - s.b)).cwiseMax(0.0);
    const double comp = (lambda.array() * (s.a * x - s.b).array()).abs().maxCoeff();
    if (viol <= 1e-10 && comp <= 1e-9) break;
    if (viol > 0.25 * prev_viol) {
      if (rho >= 1e8 && ++stalls_at_max >= 5) break;
      rho = std::min(rho * 10.0, 1e8);
    }
    prev_viol = viol;
  }

  QpResult result;
  result.outer_iterations = outer;
  RVec lam_s = lambda;
  RVec x_pol = x;
  if (polish(s, x_pol, lam_s)) {
    x = x_pol;
    lambda = lam_s;
    result.polished = true;
  }
  x = clamp(x, s.lo, s.hi);

  result.x = x;
  result.multipliers = RVec::Zero(static_cast<Eigen::Index>(problem.ineq.size()));
  for (Eigen::Index i = 0; i < m; ++i)
    result.multipliers(static_cast<Eigen::Index>(kept[i])) = lambda(i) * s.obj_scale / s.row_norm(i);
  if (problem.max_violation(x) > 1e-6)
    throw InfeasibleError("QP inequalities cannot be met within 1e-6 inside the box");
  result.kkt_residual = kkt_residual(problem, x, result.multipliers);
  return result;
}

}  // namespace maee
