// SPDX-License-Identifier: Apache-2.0
// Hot paths of one AO round: the DE fixed point, the covariance design, the
// Monte Carlo check and the position QP.
#include <benchmark/benchmark.h>

#include <random>

#include "maee/ao_driver.hpp"
#include "maee/de_core.hpp"
#include "maee/oracle.hpp"
#include "maee/qp_solver.hpp"
#include "maee/runner.hpp"
#include "maee/tx_design.hpp"

namespace {

using namespace maee;

Scenario sized(int n) {
  Scenario sc;
  sc.n_tx = sc.n_rx = n;
  sc.region_tx = sc.region_rx = n <= 4 ? 2.0 : 4.0;
  return sc;
}

void BM_DeFixedPoint(benchmark::State& state) {
  const Scenario sc = sized(static_cast<int>(state.range(0)));
  const ValidationInstance in = sample_instance(sc, 3);
  const DeProblem p = DeProblem::build(sc, in.scsi, in.apv_t, in.apv_r, in.q);
  DeOptions o;
  o.anderson_memory = static_cast<int>(state.range(1));
  int sweeps = 0;
  for (auto _ : state) {
    const DeState st = de_fixed_point(p, o);
    sweeps = st.iterations_used;
    benchmark::DoNotOptimize(st.gamma_tilde.data());
  }
  state.counters["sweeps"] = sweeps;
}
BENCHMARK(BM_DeFixedPoint)->Args({4, 0})->Args({4, 3})->Args({16, 0})->Args({16, 3});

void BM_InnerQ(benchmark::State& state) {
  const Scenario sc = sized(static_cast<int>(state.range(0)));
  const ValidationInstance in = sample_instance(sc, 4);
  for (auto _ : state) {
    const InnerQResult r = inner_q(sc, in.scsi, in.apv_t, in.apv_r);
    benchmark::DoNotOptimize(r.eval.ee);
  }
}
BENCHMARK(BM_InnerQ)->Arg(4)->Arg(16);

void BM_McAverageRate(benchmark::State& state) {
  const Scenario sc;
  const ValidationInstance in = sample_instance(sc, 5);
  for (auto _ : state) {
    const RateEstimate r = mc_average_rate(sc, in.scsi, in.apv_t, in.apv_r, in.q, state.range(0), 9);
    benchmark::DoNotOptimize(r.mean);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_McAverageRate)->Arg(1000)->Arg(10000);

void BM_SolveQp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Apv ref = upa_layout(4.0, static_cast<std::size_t>(n), 0.5);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  QpProblem qp;
  qp.quad = -0.04 * RMat::Identity(2 * n, 2 * n);
  qp.lin = RVec::NullaryExpr(2 * n, [&] { return nd(rng); });
  qp.ineq = linearize_min_distance(ref, 0.5);
  qp.lo = RVec::Constant(2 * n, -2.0);
  qp.hi = RVec::Constant(2 * n, 2.0);
  for (auto _ : state) {
    const QpResult r = solve_qp(qp, ref.stacked());
    benchmark::DoNotOptimize(r.x.data());
  }
}
BENCHMARK(BM_SolveQp)->Arg(4)->Arg(16);

void BM_AoRoundMa(benchmark::State& state) {
  const Scenario sc;
  const ScsiState scsi = sample_scsi(sc, 6);
  SolverParams params;
  params.l_ao = 1;
  AoOptions o = make_ao_options(params);
  o.evaluate_mc = false;
  for (auto _ : state) {
    const AoReport r = run_ao(sc, scsi, Scheme::parse("ma"), o, 6);
    benchmark::DoNotOptimize(r.de_ee_final);
  }
}
BENCHMARK(BM_AoRoundMa)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
