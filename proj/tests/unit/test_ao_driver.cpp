// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "test_support.hpp"

using namespace maee;

namespace {

AoOptions fast_options(int mc_samples = 2000) {
  SolverParams p;
  p.mc_samples = mc_samples;
  return make_ao_options(p);
}

void check_reports_identical(const AoReport& a, const AoReport& b) {
  CHECK(a.final_t == b.final_t);
  CHECK(a.final_r == b.final_r);
  CHECK(a.final_q.matrix() == b.final_q.matrix());
  CHECK(a.ee_per_iter == b.ee_per_iter);
  CHECK(a.de_ee_final == b.de_ee_final);
  CHECK(a.mc_ee_final == b.mc_ee_final);
  CHECK(a.iters == b.iters);
  CHECK(a.notes == b.notes);
}

}  // namespace

TEST_CASE("schemes") {
  CHECK(Scheme::parse("ma").movable_tx);
  CHECK(Scheme::parse("MA").movable_rx);
  CHECK(Scheme::parse("tma").movable_tx);
  CHECK_FALSE(Scheme::parse("tma").movable_rx);
  CHECK_FALSE(Scheme::parse("Rma").movable_tx);
  CHECK(Scheme::parse("rma").movable_rx);
  CHECK_FALSE(Scheme::parse("upa").movable_tx);
  CHECK_FALSE(Scheme::parse("upa").movable_rx);
  CHECK(Scheme::parse("upa").name() == "UPA");
  CHECK_THROWS_AS(Scheme::parse("xyz"), ConfigError);
}

TEST_CASE("fixed arrays reduce to the covariance design") {
  const Scenario sc;
  const ScsiState scsi = sample_scsi(sc, 12);
  const AoReport rep = run_ao(sc, scsi, Scheme::parse("upa"), fast_options(), 12);
  const Apv grid = upa_layout(2.0, 4, 0.5);
  CHECK(rep.final_t == grid);
  CHECK(rep.final_r == grid);
  const InnerQResult iq = inner_q(sc, scsi, grid, grid, fast_options().inner);
  CHECK(rep.de_ee_final == doctest::Approx(iq.eval.ee).epsilon(1e-9));
}

TEST_CASE("movable arrays ascend and beat the fixed arrays on the same draw") {
  const Scenario sc;
  for (std::uint64_t seed = 20; seed < 24; ++seed) {
    CAPTURE(seed);
    const ScsiState scsi = sample_scsi(sc, seed);
    const AoReport ma = run_ao(sc, scsi, Scheme::parse("ma"), fast_options(), seed);
    const AoReport upa = run_ao(sc, scsi, Scheme::parse("upa"), fast_options(), seed);
    for (std::size_t i = 1; i < ma.ee_per_iter.size(); ++i)
      CHECK(ma.ee_per_iter[i] >= ma.ee_per_iter[i - 1] - 1e-9);
    CHECK(ma.de_ee_final >= upa.de_ee_final);
    CHECK(test::independently_feasible(ma.final_t, sc.region_tx, sc.min_dist));
    CHECK(test::independently_feasible(ma.final_r, sc.region_rx, sc.min_dist));
    CHECK(ma.final_q.budget_feasible(sc.p_max));
    CHECK(ma.iters >= 1);
    CHECK(ma.iters <= fast_options().params.l_ao);
    CHECK(ma.mc_rate.n_samples == 2000);
  }
}

TEST_CASE("AO runs are deterministic") {
  const Scenario sc;
  const ScsiState scsi = sample_scsi(sc, 31);
  for (const char* s : {"ma", "tma", "rma", "upa"}) {
    const AoReport a = run_ao(sc, scsi, Scheme::parse(s), fast_options(), 31);
    const AoReport b = run_ao(sc, scsi, Scheme::parse(s), fast_options(), 31);
    check_reports_identical(a, b);
  }
}

TEST_CASE("ensembles") {
  const Scenario sc;
  SUBCASE("a single draw is the single run") {
    const EnsembleResult e = run_ensemble(sc, Scheme::parse("ma"), 1, 9, fast_options());
    const std::uint64_t s = draw_seed(9, 0);
    const AoReport r = run_ao(sc, sample_scsi(sc, s), Scheme::parse("ma"), fast_options(), s);
    CHECK(e.mean_ee == r.mc_ee_final);
    CHECK(e.records.at(0).de_ee == r.de_ee_final);
    CHECK(e.std_err == 0.0);
  }
  SUBCASE("results do not depend on the worker count") {
    const EnsembleResult a = run_ensemble(sc, Scheme::parse("rma"), 6, 3, fast_options(), 1);
    const EnsembleResult b = run_ensemble(sc, Scheme::parse("rma"), 6, 3, fast_options(), 3);
    CHECK(a.mean_ee == b.mean_ee);
    for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].final_r == b.records[i].final_r);
  }
  SUBCASE("paired MA versus UPA over fifty draws") {
    const EnsembleResult ma = run_ensemble(sc, Scheme::parse("ma"), 50, 5, fast_options());
    const EnsembleResult upa = run_ensemble(sc, Scheme::parse("upa"), 50, 5, fast_options());
    CHECK(ma.mean_ee >= upa.mean_ee);
    int wins = 0;
    for (int d = 0; d < 50; ++d) {
      CHECK(ma.records[d].seed == upa.records[d].seed);
      if (ma.records[d].mc_ee - upa.records[d].mc_ee > 0.0) ++wins;
    }
    CHECK(wins >= 45);
  }
  SUBCASE("doubling the draws shrinks the standard error") {
    AoOptions o = fast_options();
    o.evaluate_mc = false;
    const EnsembleResult a = run_ensemble(sc, Scheme::parse("upa"), 50, 8, o);
    const EnsembleResult b = run_ensemble(sc, Scheme::parse("upa"), 100, 8, o);
    CHECK(b.std_err / a.std_err == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.25));
  }
  SUBCASE("bad draw count") {
    CHECK_THROWS_AS(run_ensemble(sc, Scheme::parse("ma"), 0, 1, fast_options()), ConfigError);
  }
}
