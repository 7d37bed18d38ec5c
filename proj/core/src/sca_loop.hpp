// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "maee/tx_design.hpp"

namespace maee::detail {

template <typename Payload>
struct ScaPoint {
  RVec x;
  double value = 0.0;
  Payload payload;
};

template <typename Payload>
struct ScaRun {
  ScaPoint<Payload> last;
  std::vector<double> trace;
  std::vector<double> steps;
  int iterations = 0;
  int qp_calls = 0;
  bool exhausted = false;
};

struct Proposal {
  RVec target;
  double slope = 0.0;  // model directional derivative grad^T (target - x)
  bool used_qp = false;
};

/// Surrogate-target SCA with Armijo backtracking on the true increment:
/// x+ = x + tau (xbar - x) is accepted once x+ is admitted and
/// f(x+) - f(x) >= xi tau slope (or xi tau ||xbar - x||^2 under the quadratic
/// rule). Accepted values are therefore non-decreasing.
///   propose(point) -> Proposal
///   evaluate(x, warm_point) -> ScaPoint
///   admit(x&) -> bool, may snap x onto the region before checking it
template <typename Payload, typename Propose, typename Evaluate, typename Admit>
ScaRun<Payload> run_sca(ScaPoint<Payload> start, const ScaParams& p, Propose&& propose,
                        Evaluate&& evaluate, Admit&& admit) {
  ScaRun<Payload> run;
  run.trace.push_back(start.value);
  run.last = std::move(start);
  for (int k = 1; k <= p.max_iters; ++k) {
    run.iterations = k;
    const Proposal prop = propose(run.last);
    if (prop.used_qp) ++run.qp_calls;
    const RVec d = prop.target - run.last.x;
    if (d.cwiseAbs().maxCoeff() <= 1e-12 || !(prop.slope > 0.0)) break;
    const double scale = p.quadratic_armijo ? d.squaredNorm() : prop.slope;

    bool accepted = false;
    double tau = p.tau0;
    ScaPoint<Payload> next;
    while (tau >= p.min_tau) {
      RVec x_new = run.last.x + tau * d;
      if (admit(x_new)) {
        next = evaluate(x_new, run.last);
        if (next.value - run.last.value >= p.xi * tau * scale) {
          accepted = true;
          break;
        }
      }
      tau *= p.tau;
    }
    if (!accepted) {
      run.exhausted = true;
      break;
    }
    const double increment = next.value - run.last.value;
    run.last = std::move(next);
    run.trace.push_back(run.last.value);
    run.steps.push_back(tau);
    if (increment <= p.eps2) break;
  }
  return run;
}

}  // namespace maee::detail
