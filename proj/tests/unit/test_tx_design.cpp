// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "test_support.hpp"

using namespace maee;

namespace {

// EE of a per-mode power split, computed from scratch.
double mode_ee(const RVec& lambdas, const RVec& p, const Scenario& sc) {
  double rate = 0.0;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) rate += std::log2(1.0 + lambdas(i) * p(i));
  return rate / (sc.amp_eff * p.sum() + sc.n_tx * sc.p_circuit + sc.p_static);
}

RVec powers_in_basis(const CovMatrix& q, const EigenChannel& e) {
  return (e.u.adjoint() * q.matrix() * e.u).diagonal().real();
}

}  // namespace

TEST_CASE("water-filling") {
  SUBCASE("symmetric modes split evenly") {
    const RVec p = waterfill_powers(RVec::Ones(2), 2.0);
    CHECK(p(0) == doctest::Approx(1.0));
    CHECK(p(1) == doctest::Approx(1.0));
  }
  SUBCASE("weak mode stays dry") {
    const RVec l = (RVec(2) << 2.0, 0.5).finished();
    const RVec p = waterfill_powers(l, 1.0);
    CHECK(p(0) == doctest::Approx(1.0));
    CHECK(p(1) == 0.0);
    CHECK(water_level(l, 1.0) == doctest::Approx(1.5));
  }
  SUBCASE("KKT conditions on random modes") {
    Rng rng(5);
    std::uniform_real_distribution<double> u(0.01, 10.0);
    for (int trial = 0; trial < 50; ++trial) {
      RVec l(4);
      for (int i = 0; i < 4; ++i) l(i) = u(rng);
      std::sort(l.data(), l.data() + 4, std::greater<>());
      const double pmax = u(rng);
      const RVec p = waterfill_powers(l, pmax);
      const double level = water_level(l, pmax);
      CHECK(std::abs(p.sum() - pmax) <= 1e-10 * pmax);
      for (int i = 0; i < 4; ++i) {
        if (p(i) > 0.0)
          CHECK(std::abs(p(i) + 1.0 / l(i) - level) <= 1e-8 * std::max(1.0, level));
        else
          CHECK(1.0 / l(i) >= level - 1e-8 * std::max(1.0, level));
      }
    }
  }
  SUBCASE("no usable mode") {
    CHECK_THROWS_AS(waterfill_powers(RVec::Zero(3), 1.0), NumericalError);
  }
}

TEST_CASE("Dinkelbach covariance") {
  const Scenario sc;
  SUBCASE("zero channel gives zero covariance") {
    EigenChannel e;
    e.u = CMat::Identity(4, 4);
    e.lambdas = RVec::Zero(4);
    const DinkelbachResult r = dinkelbach_q(e, sc);
    CHECK(r.q.trace() == 0.0);
  }
  SUBCASE("scalar case matches a grid search over the transmit power") {
    Scenario s1 = sc;
    s1.n_tx = s1.n_rx = 1;
    EigenChannel e;
    e.u = CMat::Identity(1, 1);
    e.lambdas = RVec::Ones(1);
    const DinkelbachResult r = dinkelbach_q(e, s1);
    double best = 0.0;
    for (double p = 0.0; p <= 100.0; p += 1e-4)
      best = std::max(best, std::log2(1.0 + p) / (s1.amp_eff * p + s1.p_circuit + s1.p_static));
    const double got = mode_ee(e.lambdas, RVec::Constant(1, r.q.trace()), s1);
    CHECK(test::rel_diff(got, best) <= 1e-3);
    CHECK(got >= best * (1.0 - 1e-9));
  }
  SUBCASE("eta increases strictly until convergence") {
    Rng rng(9);
    std::uniform_real_distribution<double> u(1e8, 1e11);
    for (int trial = 0; trial < 20; ++trial) {
      EigenChannel e;
      e.u = CMat::Identity(4, 4);
      e.lambdas = RVec::NullaryExpr(4, [&] { return u(rng); });
      std::sort(e.lambdas.data(), e.lambdas.data() + 4, std::greater<>());
      const DinkelbachResult r = dinkelbach_q(e, sc);
      CHECK(r.converged);
      for (std::size_t i = 1; i < r.eta_trace.size(); ++i) CHECK(r.eta_trace[i] > r.eta_trace[i - 1]);
    }
  }
}

TEST_CASE("inner covariance design") {
  const Scenario sc;
  const auto inst = test::instance(sc, 51);
  SUBCASE("dominates the feasible baselines") {
    for (std::uint64_t seed = 51; seed < 56; ++seed) {
      const auto in = test::instance(sc, seed);
      const InnerQResult r = inner_q(sc, in.scsi, in.apv_t, in.apv_r);
      CHECK(r.q.budget_feasible(sc.p_max));
      auto ee = [&](const CovMatrix& q) { return evaluate_de(sc, in.scsi, in.apv_t, in.apv_r, q).ee; };
      CHECK(r.eval.ee >= ee(CovMatrix::scaled_identity(4, sc.p_max / 4)) - 1e-9);
      CHECK(r.eval.ee >= ee(CovMatrix::zero(4)) - 1e-9);
      const DeProblem p = DeProblem::build(sc, in.scsi, in.apv_t, in.apv_r, r.q);
      const EigenChannel e = EigenChannel::from_matrix(effective_tx_channel(r.eval.de, p));
      CHECK(r.eval.ee >= ee(waterfill(e, sc.p_max)) - 1e-9);
      for (std::size_t i = 1; i < r.ee_trace.size(); ++i) CHECK(r.ee_trace[i] >= r.ee_trace[i - 1]);
    }
  }
  SUBCASE("huge budget leaves the constraint inactive") {
    Scenario big = sc;
    big.p_max = 1e6;
    const InnerQResult r = inner_q(big, inst.scsi, inst.apv_t, inst.apv_r);
    CHECK_FALSE(r.budget_active);
    CHECK(r.q.trace() < 1e6);
    // No refresh from the returned point improves on it.
    const DeProblem p = DeProblem::build(big, inst.scsi, inst.apv_t, inst.apv_r, r.q);
    const EigenChannel e = EigenChannel::from_matrix(effective_tx_channel(r.eval.de, p));
    const DinkelbachResult d = dinkelbach_q(e, big);
    CHECK(d.q.trace() < 1e6);
    CHECK(r.eval.ee >= evaluate_de(big, inst.scsi, inst.apv_t, inst.apv_r, d.q).ee - 1e-9);
  }
  SUBCASE("tiny budget is always active") {
    Scenario tiny = sc;
    tiny.p_max = 1e-9;
    const InnerQResult r = inner_q(tiny, inst.scsi, inst.apv_t, inst.apv_r);
    CHECK(r.budget_active);
    CHECK(std::abs(r.q.trace() - 1e-9) <= 1e-10 * 1e-9);
  }
}

TEST_CASE("EE of a transmit layout") {
  SUBCASE("single LOS path reduces to single-stream EE") {
    Scenario sc;
    sc.l_tx = sc.l_rx = 1;
    const ScsiState scsi = sample_scsi(sc, 4);
    const Apv r = upa_layout(2.0, 4, 0.5);
    const Apv t = initial_layout(2.0, 4, 0.5);
    const TxContext ctx{sc, scsi, r, {}};
    const double lambda = scsi.gain * sc.n_tx * sc.n_rx / sc.noise_power;
    double best = 0.0;
    const int steps = 200000;
    for (int i = 0; i <= steps; ++i) {
      const double p = sc.p_max * i / steps;
      best = std::max(best, std::log2(1.0 + lambda * p) / (sc.amp_eff * p + sc.n_tx * sc.p_circuit + sc.p_static));
    }
    const double got = ee_of_t(t, ctx);
    CHECK(got == doctest::Approx(best).epsilon(1e-6));
    CHECK(got >= best * (1.0 - 1e-9));
  }
  SUBCASE("pure, positive") {
    const Scenario sc;
    const auto inst = test::instance(sc, 61);
    const TxContext ctx{sc, inst.scsi, inst.apv_r, {}};
    const double a = ee_of_t(inst.apv_t, ctx);
    const double b = ee_of_t(inst.apv_t, ctx);
    CHECK(a == b);
    CHECK(a > 0.0);
  }
}

TEST_CASE("finite-difference gradient") {
  const RVec x = (RVec(3) << 0.1, -0.4, 0.7).finished();
  SUBCASE("constant objective") {
    const RVec g = fd_gradient([](const RVec&) { return 2.5; }, x, 1e-3);
    CHECK(g.norm() == 0.0);
  }
  SUBCASE("linear objective") {
    const RVec a = (RVec(3) << 1.5, -2.0, 0.25).finished();
    const RVec g = fd_gradient([&](const RVec& v) { return a.dot(v); }, x, 1e-3);
    CHECK((g - a).norm() < 1e-10);
  }
  SUBCASE("parallel evaluation matches the sequential one") {
    auto f = [](const RVec& v) { return std::sin(v(0)) * v(1) + v(2) * v(2); };
    CHECK((fd_gradient(f, x, 1e-3, nullptr, 3) - fd_gradient(f, x, 1e-3)).norm() == 0.0);
  }
  SUBCASE("EE gradient converges to finer central differences at first order") {
    const Scenario sc;
    const auto inst = test::instance(sc, 71);
    const TxContext ctx{sc, inst.scsi, inst.apv_r, {}};
    auto f = [&](const RVec& v) { return ee_of_t(Apv::from_stacked(v), ctx); };
    const RVec t = inst.apv_t.stacked();
    const RVec g = fd_gradient(f, t, 1e-3);
    const double h = 1e-4;
    RVec c(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      RVec a = t;
      RVec b = t;
      a(i) += h;
      b(i) -= h;
      c(i) = (f(a) - f(b)) / (2.0 * h);
    }
    // Forward-difference truncation is eps1/2 * f'', so shrinking the step
    // tenfold shrinks the error about tenfold until solver noise dominates.
    const double e1 = (g - c).norm();
    const double e2 = (fd_gradient(f, t, 1e-4) - c).norm();
    const double e3 = (fd_gradient(f, t, 1e-5) - c).norm();
    CHECK(e1 / e2 == doctest::Approx(10.0).epsilon(0.3));
    CHECK(e3 <= 1e-3 * c.norm());
  }
}

TEST_CASE("linearized distance constraints") {
  SUBCASE("two points one wavelength apart") {
    const Apv ref({Position{0.0, 0.0}, Position{1.0, 0.0}});
    const auto c = linearize_min_distance(ref, 0.5);
    REQUIRE(c.size() == 1);
    const RVec x = ref.stacked();
    CHECK(c[0].a.dot(x) - c[0].b == doctest::Approx(0.5));
    // x_j - x_i >= 0.5
    CHECK(c[0].a(2) == doctest::Approx(1.0));
    CHECK(c[0].a(0) == doctest::Approx(-1.0));
    CHECK(c[0].b == doctest::Approx(0.5));
  }
  SUBCASE("every feasible reference satisfies its own linearization") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      const Apv a = sample_feasible_layout(2.0, 4, 0.5, rng);
      CHECK(satisfies(linearize_min_distance(a, 0.5), a.stacked()));
    }
  }
  SUBCASE("the linearization is an inner approximation") {
    Rng rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int tested = 0;
    for (int i = 0; i < 10000; ++i) {
      const Apv ref({Position{u(rng), u(rng)}, Position{u(rng), u(rng)}});
      if (ref.min_pairwise_distance() < 1e-3) continue;
      const auto c = linearize_min_distance(ref, 0.5);
      const Apv probe({Position{u(rng), u(rng)}, Position{u(rng), u(rng)}});
      if (satisfies(c, probe.stacked())) {
        CHECK(probe.min_pairwise_distance() >= 0.5 - 1e-12);
        ++tested;
      }
    }
    CHECK(tested > 1000);
  }
  SUBCASE("coincident reference points") {
    const Apv ref({Position{0.2, 0.2}, Position{0.2, 0.2}});
    CHECK_THROWS_AS(linearize_min_distance(ref, 0.5), NumericalError);
  }
}

TEST_CASE("generic position SCA") {
  SUBCASE("single antenna reaches an interior optimum") {
    const RVec star = (RVec(2) << 0.3, -0.2).finished();
    ScaParams p;
    p.delta = 1.0;
    p.eps2 = 1e-10;
    const ScaReport r = sca_maximize([&](const RVec& x) { return -(x - star).squaredNorm(); },
                                     Apv({Position{-0.8, 0.9}}), 2.0, 0.5, p);
    CHECK((r.apv.stacked() - star).norm() < 1e-2);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1]);
  }
  SUBCASE("default regularizer also gets there") {
    const RVec star = (RVec(2) << 0.3, -0.2).finished();
    ScaParams p;
    p.eps2 = 1e-10;
    p.max_iters = 200;
    const ScaReport r = sca_maximize([&](const RVec& x) { return -(x - star).squaredNorm(); },
                                     Apv({Position{-0.8, 0.9}}), 2.0, 0.5, p);
    CHECK((r.apv.stacked() - star).norm() < 1e-2);
  }
  SUBCASE("distance constraints stay satisfied") {
    // Both antennas are pulled to the same point.
    ScaParams p;
    p.delta = 1.0;
    p.eps2 = 1e-10;
    p.max_iters = 100;
    const ScaReport r = sca_maximize(
        [](const RVec& x) { return -x.squaredNorm(); },
        Apv({Position{-0.9, 0.0}, Position{0.9, 0.0}}), 2.0, 0.5, p);
    CHECK(test::independently_feasible(r.apv, 2.0, 0.5));
    CHECK(r.apv.min_pairwise_distance() == doctest::Approx(0.5).epsilon(1e-3));
  }
}

TEST_CASE("transmit SCA") {
  SUBCASE("position-independent objective stops at once") {
    Scenario sc;
    sc.n_tx = 1;
    sc.l_tx = sc.l_rx = 1;
    const ScsiState scsi = sample_scsi(sc, 2);
    const TxContext ctx{sc, scsi, upa_layout(2.0, 4, 0.5), {}};
    const Apv t0({Position{0.1, -0.3}});
    const TxSolveReport r = sca_optimize_tx(ctx, t0, ScaParams{});
    CHECK(r.outer_iters == 1);
    CHECK((r.apv_t.stacked() - t0.stacked()).norm() < 1e-6);
  }
  SUBCASE("default instance ascends and stays feasible") {
    const Scenario sc;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const ScsiState scsi = sample_scsi(sc, seed);
      const TxContext ctx{sc, scsi, upa_layout(2.0, 4, 0.5), {}};
      const TxSolveReport r = sca_optimize_tx(ctx, initial_layout(2.0, 4, 0.5), ScaParams{});
      for (std::size_t i = 1; i < r.ee_trace.size(); ++i)
        CHECK(r.ee_trace[i] >= r.ee_trace[i - 1] - 1e-9);
      CHECK(r.ee_trace.back() >= r.ee_trace.front());
      CHECK(r.eval.ee == r.ee_trace.back());
      CHECK(test::independently_feasible(r.apv_t, 2.0, 0.5));
      CHECK(r.q.budget_feasible(sc.p_max));
    }
  }
  SUBCASE("infeasible start is rejected") {
    const Scenario sc;
    const ScsiState scsi = sample_scsi(sc, 1);
    const TxContext ctx{sc, scsi, upa_layout(2.0, 4, 0.5), {}};
    const Apv bad({Position{0, 0}, Position{0.1, 0}, Position{0.5, 0.5}, Position{-0.5, 0.5}});
    CHECK_THROWS_AS(sca_optimize_tx(ctx, bad, ScaParams{}), ConfigError);
  }
}
