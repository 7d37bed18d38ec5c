// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "maee/types.hpp"

namespace maee {

/// Static description of the point-to-point link. Lengths are in carrier
/// wavelengths, powers in watts, gains linear.
struct Scenario {
  int n_tx = 4;
  int n_rx = 4;
  int l_tx = 5;
  int l_rx = 5;
  double region_tx = 2.0;
  double region_rx = 2.0;
  double min_dist = 0.5;
  double noise_power = 1e-11;  // -80 dBm
  double amp_eff = 5.0;
  double p_max = 1.0;          // 30 dBm
  double p_circuit = 1.0;      // 30 dBm per antenna
  double p_static = 10.0;      // 40 dBm
  double rician_k = 10.0;
  double pathloss_c0 = 1e-4;   // -40 dB
  double pathloss_exp = 2.8;
  double dist_min = 20.0;
  double dist_max = 100.0;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// Algorithm controls shared by the design loops.
struct SolverParams {
  double delta_t = 0.02;
  double delta_r = 0.02;
  double eps1 = 1e-3;
  double eps2 = 1e-3;
  double tau0 = 1.0;
  double tau = 0.5;
  double xi = 0.6;
  int l_ao = 20;
  int l_de = 200;  // DE sweep cap; 20 sweeps leave hard draws unconverged
  int l_t_hat = 20;
  int l_r_hat = 20;
  double de_tol = 1e-8;
  int mc_samples = 10000;
  /// Use the absolute-position form of the transmit shortcut step.
  bool absolute_tx_shortcut = false;
  /// Armijo test against xi tau ||step||^2 rather than xi tau times the
  /// predicted linear increase.
  bool quadratic_armijo = false;

  void validate() const;
};

using RawConfig = std::map<std::string, std::string>;

/// Parses flat `key = value` text; `#` starts a comment. Later keys win.
RawConfig parse_config_text(const std::string& text);
RawConfig read_config_file(const std::string& path);

/// Builds a validated Scenario; omitted keys take the built-in defaults.
/// dBm / dB fields are converted to linear scale here.
Scenario build_scenario(const RawConfig& raw);
SolverParams build_solver_params(const RawConfig& raw);

/// Rejects keys that neither builder understands.
void check_known_keys(const RawConfig& raw);

/// Canonical `key=value` rendering of a config (sorted keys), the input to
/// config_hash.
std::string canonical_text(const RawConfig& raw);
/// FNV-1a 64-bit hash of canonical_text, rendered as 16 hex digits.
std::string config_hash(const RawConfig& raw);

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// One statistical-CSI draw.
struct ScsiState {
  std::vector<PathAngles> tx_angles;
  std::vector<PathAngles> rx_angles;
  CMat sigma_bar;  // L_r x L_t, single entry at (0, 0)
  RMat gain_mat;   // L_r x L_t, NLOS standard deviations
  double distance = 0.0;
  double gain = 0.0;
};

using Rng = std::mt19937_64;

/// Derives an independent substream seed from (seed, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Draws angles with density sin(phi)/(2 pi) on [0, pi]^2.
PathAngles sample_angles(Rng& rng);

ScsiState sample_scsi(const Scenario& scenario, std::uint64_t seed);

/// Builds the S-CSI path matrices for an explicit distance (no randomness
/// except the angles, which are taken as given).
ScsiState make_scsi(const Scenario& scenario, std::vector<PathAngles> tx_angles,
                    std::vector<PathAngles> rx_angles, double distance);

/// L x count matrix of unit-modulus steering phases exp(j 2 pi rho_l(p_n)).
CMat field_response(const Apv& apv, const std::vector<PathAngles>& angles);
inline CMat field_response_tx(const Apv& t, const std::vector<PathAngles>& a) {
  return field_response(t, a);
}
inline CMat field_response_rx(const Apv& r, const std::vector<PathAngles>& a) {
  return field_response(r, a);
}

/// H = F^H (Sigma_bar + gain_mat .* W) G for a fresh W.
CMat sample_channel(const ScsiState& scsi, const CMat& g, const CMat& f, Rng& rng);

/// Centered square grid spanning the region (see README for the pitch rule).
Apv initial_layout(double region_side, int count, double min_dist);

/// Centered k x k grid at the given pitch, k = ceil(sqrt(count)).
Apv upa_layout(double region_side, int count, double pitch);

}  // namespace maee
