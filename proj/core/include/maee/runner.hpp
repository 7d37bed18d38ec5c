// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maee/ao_driver.hpp"

namespace maee {

/// A parsed configuration with its provenance hash.
struct RunConfig {
  RawConfig raw;
  Scenario scenario;
  SolverParams params;
  std::string hash;

  /// Validates keys and builds the scenario and solver parameters.
  static RunConfig from_raw(RawConfig raw);
  /// Copy with one key overridden (the hash is recomputed).
  RunConfig with(const std::string& key, const std::string& value) const;
};

enum class SweepVar { PMaxDbm, RegionWl };

/// Canonical names are the config keys p_max_dbm and x_region_wl; the CLI
/// aliases pmax and region are accepted too.
SweepVar parse_sweep_var(const std::string& name);
std::string sweep_var_name(SweepVar var);

struct SweepSpec {
  SweepVar var = SweepVar::PMaxDbm;
  std::vector<double> values;
  std::vector<Scheme> schemes;
  int n_draws = 50;
  std::uint64_t seed = 1;
  std::string output_dir;

  /// Throws ConfigError on an empty value or scheme list, n_draws < 1, or
  /// values the overridden config rejects.
  void validate() const;
};

/// One line of results.csv.
struct ResultRow {
  std::string sweep_var;
  double value = 0.0;
  std::string scheme;
  double ee_mean = 0.0;
  double ee_stderr = 0.0;
  int n_draws = 0;
  std::uint64_t seed = 0;
  std::string config_hash;  // of the base config with the sweep key applied
};

inline constexpr const char* kResultsHeader =
    "sweep_var,value,scheme,ee_mean,ee_stderr,n_draws,seed,config_hash";

struct SweepPoint {
  double value = 0.0;
  EnsembleResult ensemble;
};

struct SweepOutcome {
  std::vector<ResultRow> rows;      // value-major, schemes in spec order
  std::vector<SweepPoint> points;  // same order as rows
};

/// Runs every (value, scheme) ensemble. Draw d of every point uses the
/// S-CSI seeded by draw_seed(seed, d), so all points are paired. When
/// output_dir is non-empty, writes results.csv, plot_data.csv, designs.csv
/// and manifest.json there; results.csv is rewritten atomically after each
/// sweep value.
SweepOutcome cmd_sweep(const RunConfig& config, const SweepSpec& spec);

/// A random feasible operating point for DE validation.
struct ValidationInstance {
  ScsiState scsi;
  Apv apv_t;
  Apv apv_r;
  CovMatrix q;
};

/// Uniform positions in the region, rejection-sampled against min_dist.
Apv sample_feasible_layout(double side, int count, double min_dist, Rng& rng);
/// Haar-random eigenvectors, Dirichlet(1) power split, trace in [P_max/10, P_max].
CovMatrix sample_covariance(int n, double p_max, Rng& rng);
ValidationInstance sample_instance(const Scenario& scenario, std::uint64_t seed);

struct ValidationRecord {
  int instance = 0;
  std::uint64_t seed = 0;
  double de_rate_t = 0.0;
  double de_rate_r = 0.0;
  double mc_rate = 0.0;
  double mc_stderr = 0.0;
  double rel_err = 0.0;     // |R_t - MC| / MC
  double side_gap = 0.0;    // |R_r - R_t| / R_t
};

struct ValidationReport {
  std::vector<ValidationRecord> records;
  double max_rel_err = 0.0;
  double median_rel_err = 0.0;
  double max_side_gap = 0.0;
  double bound = 0.05;
  bool pass = false;  // max_rel_err <= bound
};

/// Compares the DE rate with the MC oracle (params.mc_samples draws) on
/// n_instances random operating points. Writes validate_de.json when
/// output_dir is non-empty.
ValidationReport cmd_validate_de(const RunConfig& config, int n_instances, std::uint64_t seed,
                                 double bound = 0.05, const std::string& output_dir = "");

/// One AO run on the S-CSI drawn from `seed`; writes single.json when
/// output_dir is non-empty.
AoReport cmd_single(const RunConfig& config, const Scheme& scheme, std::uint64_t seed,
                    const std::string& output_dir = "");

/// Writes `text` to `path` through a temporary file and a rename.
void write_atomic(const std::string& path, const std::string& text);

/// Shortest decimal rendering that parses back to the same double.
std::string format_double(double v);

}  // namespace maee
