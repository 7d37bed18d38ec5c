// SPDX-License-Identifier: Apache-2.0
#include "maee/ao_driver.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <sstream>

#include "maee/parallel.hpp"

namespace maee {

Scheme Scheme::from_tag(SchemeTag tag) {
  switch (tag) {
    case SchemeTag::MA: return {tag, true, true};
    case SchemeTag::TMA: return {tag, true, false};
    case SchemeTag::RMA: return {tag, false, true};
    case SchemeTag::UPA: return {tag, false, false};
  }
  throw ConfigError("unknown scheme tag");
}

Scheme Scheme::parse(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "ma") return from_tag(SchemeTag::MA);
  if (s == "tma") return from_tag(SchemeTag::TMA);
  if (s == "rma") return from_tag(SchemeTag::RMA);
  if (s == "upa") return from_tag(SchemeTag::UPA);
  throw ConfigError("unknown scheme '" + name + "' (expected ma, tma, rma or upa)");
}

std::string Scheme::name() const {
  switch (tag) {
    case SchemeTag::MA: return "MA";
    case SchemeTag::TMA: return "TMA";
    case SchemeTag::RMA: return "RMA";
    case SchemeTag::UPA: return "UPA";
  }
  return "?";
}

AoOptions make_ao_options(const SolverParams& params) {
  params.validate();
  AoOptions o;
  o.params = params;
  o.inner.de.tol = params.de_tol;
  o.inner.de.max_iters = params.l_de;
  return o;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr std::uint64_t kMcStream = 0x6d632d6565ULL;

// Grid candidates at pitch base + j * step up to the region-spanning grid.
// The list for a larger region contains the list for a smaller one, so the
// best start can only improve as the region grows.
std::vector<Apv> start_layouts(double side, int count, double min_dist, bool movable,
                               double step) {
  const double base = std::max(0.5, min_dist);
  std::vector<Apv> out{upa_layout(side, count, base)};
  if (!movable || count == 1) return out;
  if (step > 0.0) {
    for (int j = 1;; ++j) {
      const double pitch = base + j * step;
      Apv a;
      try {
        a = upa_layout(side, count, pitch);
      } catch (const InfeasibleError&) {
        break;
      }
      out.push_back(std::move(a));
    }
  }
  Apv spread = initial_layout(side, count, min_dist);
  if (std::find(out.begin(), out.end(), spread) == out.end()) out.push_back(std::move(spread));
  return out;
}

std::string rollback_note(int round, const char* phase, double drop) {
  std::ostringstream os;
  os << "round " << round << ": " << phase << " phase lowered EE by " << drop << ", rolled back";
  return os.str();
}

}  // namespace

AoReport run_ao(const Scenario& sc, const ScsiState& scsi, const Scheme& scheme,
                const AoOptions& options, std::uint64_t seed) {
  sc.validate();
  options.params.validate();
  const SolverParams& sp = options.params;
  const ScaParams tx_params = tx_sca_params(sp);
  const ScaParams rx_params = rx_sca_params(sp);

  AoReport rep;
  rep.scheme = scheme;
  rep.seed = seed;

  auto t0 = Clock::now();
  const auto tx_starts = start_layouts(sc.region_tx, sc.n_tx, sc.min_dist, scheme.movable_tx,
                                       options.start_pitch_step);
  const auto rx_starts = start_layouts(sc.region_rx, sc.n_rx, sc.min_dist, scheme.movable_rx,
                                       options.start_pitch_step);
  Apv t = tx_starts.front();
  Apv r = rx_starts.front();
  CovMatrix q = CovMatrix::scaled_identity(sc.n_tx, sc.p_max / sc.n_tx);
  DeEvaluation eval;
  // Coordinate-wise choice: transmit layout against the receive UPA, then
  // the receive layout against that. Ties keep the earlier (tighter) grid.
  auto pick = [&](const std::vector<Apv>& cands, auto&& score) {
    std::size_t best = 0;
    double best_ee = -1.0;
    for (std::size_t i = 0; i < cands.size() && cands.size() > 1; ++i) {
      const double ee_i = score(cands[i]);
      if (ee_i > best_ee) {
        best_ee = ee_i;
        best = i;
      }
    }
    return cands[best];
  };
  t = pick(tx_starts, [&](const Apv& c) { return inner_q(sc, scsi, c, r, options.inner).eval.ee; });
  r = pick(rx_starts, [&](const Apv& c) { return inner_q(sc, scsi, t, c, options.inner).eval.ee; });
  eval = evaluate_de(sc, scsi, t, r, q, options.inner.de);
  double ee = eval.ee;
  rep.ee_per_iter.push_back(ee);
  rep.timings.init = seconds_since(t0);

  for (int round = 1; round <= sp.l_ao; ++round) {
    rep.iters = round;
    const double round_start = ee;

    t0 = Clock::now();
    try {
      Apv t_new = t;
      CovMatrix q_new;
      DeEvaluation e_new;
      if (scheme.movable_tx) {
        TxSolveReport tr = sca_optimize_tx(TxContext{sc, scsi, r, options.inner}, t, tx_params, &q);
        t_new = tr.apv_t;
        q_new = tr.q;
        e_new = std::move(tr.eval);
      } else {
        InnerQResult iq = inner_q(sc, scsi, t, r, options.inner, &q, &eval.de);
        q_new = iq.q;
        e_new = std::move(iq.eval);
      }
      if (e_new.ee >= ee) {
        t = std::move(t_new);
        q = std::move(q_new);
        eval = std::move(e_new);
        ee = eval.ee;
      } else {
        if (ee - e_new.ee > 1e-12 * ee) rep.notes.push_back(rollback_note(round, "transmit", ee - e_new.ee));
      }
    } catch (const Error& e) {
      rep.notes.push_back("round " + std::to_string(round) + ": transmit phase failed: " + e.what());
    }
    rep.ee_per_iter.push_back(ee);
    rep.timings.tx += seconds_since(t0);

    if (scheme.movable_rx) {
      t0 = Clock::now();
      try {
        RxContext ctx{sc, scsi, t, q, options.inner.de};
        const RxSolveReport rr = sca_optimize_rx(ctx, r, rx_params);
        DeOptions o = options.inner.de;
        o.warm_start = &rr.eval.de;
        DeEvaluation e_new = evaluate_de(sc, scsi, t, rr.apv_r, q, o);
        if (e_new.ee >= ee) {
          r = rr.apv_r;
          eval = std::move(e_new);
          ee = eval.ee;
        } else {
          if (ee - e_new.ee > 1e-12 * ee) rep.notes.push_back(rollback_note(round, "receive", ee - e_new.ee));
        }
      } catch (const Error& e) {
        rep.notes.push_back("round " + std::to_string(round) + ": receive phase failed: " + e.what());
      }
      rep.ee_per_iter.push_back(ee);
      rep.timings.rx += seconds_since(t0);
    }
    if (ee - round_start < sp.eps2) break;
  }

  if (!t.feasible(sc.region_tx, sc.min_dist) || !r.feasible(sc.region_rx, sc.min_dist))
    throw NumericalError("AO produced an infeasible design");
  rep.final_t = t;
  rep.final_r = r;
  rep.final_q = q;
  rep.de_rate_final = eval.rate;
  rep.de_ee_final = ee;

  if (options.evaluate_mc) {
    t0 = Clock::now();
    rep.mc_rate = mc_average_rate(sc, scsi, t, r, q, sp.mc_samples, derive_seed(seed, kMcStream));
    rep.mc_ee_final = energy_efficiency(std::max(0.0, rep.mc_rate.mean), q, sc);
    rep.timings.mc = seconds_since(t0);
  } else {
    rep.mc_ee_final = ee;
  }
  return rep;
}

std::uint64_t draw_seed(std::uint64_t seed, int draw) {
  return derive_seed(seed, static_cast<std::uint64_t>(draw));
}

EnsembleResult run_ensemble(const Scenario& sc, const Scheme& scheme, int n_draws,
                            std::uint64_t seed, const AoOptions& options, unsigned workers) {
  if (n_draws < 1) throw ConfigError("n_draws must be >= 1");
  EnsembleResult res;
  res.scheme = scheme;
  res.records.resize(static_cast<std::size_t>(n_draws));
  parallel_for(
      static_cast<std::size_t>(n_draws),
      [&](std::size_t d) {
        const std::uint64_t s = draw_seed(seed, static_cast<int>(d));
        const ScsiState scsi = sample_scsi(sc, s);
        const AoReport rep = run_ao(sc, scsi, scheme, options, s);
        DrawRecord& rec = res.records[d];
        rec.draw = static_cast<int>(d);
        rec.seed = s;
        rec.distance = scsi.distance;
        rec.de_ee = rep.de_ee_final;
        rec.mc_ee = rep.mc_ee_final;
        rec.iters = rep.iters;
        rec.ee_per_iter = rep.ee_per_iter;
        rec.final_t = rep.final_t;
        rec.final_r = rep.final_r;
      },
      workers == 0 ? worker_count() : workers);

  double sum = 0.0;
  double sum_de = 0.0;
  for (const auto& r : res.records) {
    sum += r.mc_ee;
    sum_de += r.de_ee;
  }
  const double n = static_cast<double>(n_draws);
  res.mean_ee = sum / n;
  res.mean_de_ee = sum_de / n;
  if (n_draws > 1) {
    double ss = 0.0;
    for (const auto& r : res.records) ss += (r.mc_ee - res.mean_ee) * (r.mc_ee - res.mean_ee);
    res.std_err = std::sqrt(ss / (n - 1.0) / n);
  }
  return res;
}

}  // namespace maee
