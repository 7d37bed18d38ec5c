// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maee/rx_design.hpp"

namespace maee {

enum class SchemeTag { MA, TMA, RMA, UPA };

/// Which sides of the link have movable antennas.
struct Scheme {
  SchemeTag tag = SchemeTag::MA;
  bool movable_tx = true;
  bool movable_rx = true;

  static Scheme from_tag(SchemeTag tag);
  /// Accepts ma / tma / rma / upa in any letter case.
  static Scheme parse(const std::string& name);
  /// Upper-case tag name.
  std::string name() const;
};

/// Wall-clock seconds per phase; excluded from reproducibility checks.
struct AoTimings {
  double init = 0.0;
  double tx = 0.0;
  double rx = 0.0;
  double mc = 0.0;
};

struct AoReport {
  Scheme scheme;
  Apv final_t;
  Apv final_r;
  CovMatrix final_q;
  std::vector<double> ee_per_iter;  // DE-based EE: initial point, then after every phase
  double de_rate_final = 0.0;
  double de_ee_final = 0.0;
  RateEstimate mc_rate;
  double mc_ee_final = 0.0;
  int iters = 0;  // AO rounds run
  std::uint64_t seed = 0;
  AoTimings timings;
  std::vector<std::string> notes;  // phases that failed or were rolled back
};

struct AoOptions {
  SolverParams params;
  InnerQOptions inner;
  /// Evaluate the final design by Monte Carlo (params.mc_samples draws).
  bool evaluate_mc = true;
  /// Pitch increment (wavelengths) of the grid ladder tried as starting
  /// layouts on movable sides; 0 tries only the UPA and the spread grid.
  double start_pitch_step = 0.1;
};

/// Builds the solver options used by the design loops from SolverParams.
AoOptions make_ao_options(const SolverParams& params);

/// Alternating optimization: transmit phase (SCA over t with the EE-optimal
/// Q, or the covariance alone when t is fixed), then receive phase (SCA over
/// r with Q fixed). Fixed sides use a UPA at pitch max(lambda/2, D); movable
/// sides start from the best of a ladder of centered grids, from that UPA up
/// to the region-spanning grid, scored by the EE-optimal covariance.
/// A phase that fails or lowers the DE-based EE is rolled back. Rounds stop
/// once one improves EE by less than eps2. The final design's MC check uses
/// a stream derived from `seed`, so schemes run with equal seeds share noise.
AoReport run_ao(const Scenario& scenario, const ScsiState& scsi, const Scheme& scheme,
                const AoOptions& options, std::uint64_t seed);

/// Per-draw outcome of an ensemble.
struct DrawRecord {
  int draw = 0;
  std::uint64_t seed = 0;
  double distance = 0.0;
  double de_ee = 0.0;
  double mc_ee = 0.0;
  int iters = 0;
  std::vector<double> ee_per_iter;
  Apv final_t;
  Apv final_r;
};

struct EnsembleResult {
  Scheme scheme;
  double mean_ee = 0.0;  // of the MC-validated EE (DE-based when MC is off)
  double std_err = 0.0;
  double mean_de_ee = 0.0;
  std::vector<DrawRecord> records;
};

/// Seed of draw d: derive_seed(seed, d). The S-CSI of a draw depends only on
/// this seed and the geometry-free scenario fields, so ensembles run with the
/// same seed are paired across schemes and sweep values.
std::uint64_t draw_seed(std::uint64_t seed, int draw);

EnsembleResult run_ensemble(const Scenario& scenario, const Scheme& scheme, int n_draws,
                            std::uint64_t seed, const AoOptions& options,
                            unsigned workers = 0);

}  // namespace maee
