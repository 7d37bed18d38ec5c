// SPDX-License-Identifier: Apache-2.0
#include "maee/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

namespace maee {
namespace {

constexpr double kPi = std::numbers::pi;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 1e9)
    throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
  return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
}

template <typename F>
void with(const RawConfig& raw, const char* key, F&& f) {
  if (auto it = raw.find(key); it != raw.end()) f(it->second);
}

const std::set<std::string>& scenario_keys() {
  static const std::set<std::string> keys = {
      "n",           "m",           "l_paths",        "l_tx",           "l_rx",
      "x_region_wl", "x_region_tx_wl", "x_region_rx_wl", "d_min_wl",     "sigma2_dbm",
      "omega",       "p_max_dbm",   "p_c_dbm",        "p_s_dbm",        "k_rician",
      "c0_db",       "alpha0",      "dist_min_m",     "dist_max_m"};
  return keys;
}

const std::set<std::string>& solver_keys() {
  static const std::set<std::string> keys = {
      "delta_t", "delta_r", "eps1",    "eps2",    "tau0",   "tau",        "xi",
      "l_ao",    "l_de",    "l_t_hat", "l_r_hat", "de_tol", "mc_samples", "absolute_tx_shortcut",
      "quadratic_armijo"};
  return keys;
}

int grid_side(int count) {
  int k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
  while (k * k < count) ++k;
  while (k > 1 && (k - 1) * (k - 1) >= count) --k;
  return k;
}

bool layout_fits(double side, int count, double pitch) {
  const int k = grid_side(count);
  return (k - 1) * pitch <= side * (1.0 + 1e-12);
}

}  // namespace

void Scenario::validate() const {
  if (n_tx < 1 || n_rx < 1) throw ConfigError("antenna counts must be >= 1");
  if (l_tx < 1 || l_rx < 1) throw ConfigError("path counts must be >= 1");
  if (!(min_dist >= 0.5)) throw ConfigError("min distance below lambda/2");
  if (!(region_tx > 0.0) || !(region_rx > 0.0)) throw ConfigError("region sides must be positive");
  if (!(noise_power > 0.0)) throw ConfigError("noise power must be positive");
  if (!(amp_eff > 0.0)) throw ConfigError("amplifier efficiency must be positive");
  if (p_max < 0.0 || p_circuit < 0.0 || p_static < 0.0)
    throw ConfigError("negative power in scenario");
  if (n_tx * p_circuit + p_static <= 0.0)
    throw ConfigError("static plus circuit power must be positive");
  if (rician_k < 0.0) throw ConfigError("Rician factor must be nonnegative");
  if (!(pathloss_c0 > 0.0)) throw ConfigError("path-loss constant must be positive");
  if (!(dist_min > 0.0) || dist_max < dist_min) throw ConfigError("invalid distance range");
  if (!layout_fits(region_tx, n_tx, min_dist) || !layout_fits(region_rx, n_rx, min_dist))
    throw ConfigError("region cannot host feasible layout");
}

void SolverParams::validate() const {
  if (!(delta_t > 0.0) || !(delta_r > 0.0)) throw ConfigError("SCA regularizers must be positive");
  if (!(eps1 > 0.0) || !(eps2 > 0.0)) throw ConfigError("eps1/eps2 must be positive");
  if (!(tau0 > 0.0) || !(tau > 0.0 && tau < 1.0)) throw ConfigError("invalid line-search step");
  if (!(xi > 0.0 && xi < 1.0)) throw ConfigError("xi must lie in (0, 1)");
  if (l_ao < 1 || l_de < 1 || l_t_hat < 1 || l_r_hat < 1)
    throw ConfigError("iteration caps must be >= 1");
  if (!(de_tol > 0.0)) throw ConfigError("de_tol must be positive");
  if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
}

RawConfig parse_config_text(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    raw[key] = value;
  }
  return raw;
}

RawConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void check_known_keys(const RawConfig& raw) {
  for (const auto& [k, v] : raw)
    if (!scenario_keys().contains(k) && !solver_keys().contains(k))
      throw ConfigError("unknown config key '" + k + "'");
}

Scenario build_scenario(const RawConfig& raw) {
  Scenario s;
  with(raw, "n", [&](auto& v) { s.n_tx = to_int("n", v); });
  with(raw, "m", [&](auto& v) { s.n_rx = to_int("m", v); });
  with(raw, "l_paths", [&](auto& v) { s.l_tx = s.l_rx = to_int("l_paths", v); });
  with(raw, "l_tx", [&](auto& v) { s.l_tx = to_int("l_tx", v); });
  with(raw, "l_rx", [&](auto& v) { s.l_rx = to_int("l_rx", v); });
  with(raw, "x_region_wl", [&](auto& v) { s.region_tx = s.region_rx = to_double("x_region_wl", v); });
  with(raw, "x_region_tx_wl", [&](auto& v) { s.region_tx = to_double("x_region_tx_wl", v); });
  with(raw, "x_region_rx_wl", [&](auto& v) { s.region_rx = to_double("x_region_rx_wl", v); });
  with(raw, "d_min_wl", [&](auto& v) { s.min_dist = to_double("d_min_wl", v); });
  with(raw, "sigma2_dbm", [&](auto& v) { s.noise_power = dbm_to_watt(to_double("sigma2_dbm", v)); });
  with(raw, "omega", [&](auto& v) { s.amp_eff = to_double("omega", v); });
  with(raw, "p_max_dbm", [&](auto& v) { s.p_max = dbm_to_watt(to_double("p_max_dbm", v)); });
  with(raw, "p_c_dbm", [&](auto& v) { s.p_circuit = dbm_to_watt(to_double("p_c_dbm", v)); });
  with(raw, "p_s_dbm", [&](auto& v) { s.p_static = dbm_to_watt(to_double("p_s_dbm", v)); });
  with(raw, "k_rician", [&](auto& v) { s.rician_k = to_double("k_rician", v); });
  with(raw, "c0_db", [&](auto& v) { s.pathloss_c0 = db_to_linear(to_double("c0_db", v)); });
  with(raw, "alpha0", [&](auto& v) { s.pathloss_exp = to_double("alpha0", v); });
  with(raw, "dist_min_m", [&](auto& v) { s.dist_min = to_double("dist_min_m", v); });
  with(raw, "dist_max_m", [&](auto& v) { s.dist_max = to_double("dist_max_m", v); });
  s.validate();
  return s;
}

SolverParams build_solver_params(const RawConfig& raw) {
  SolverParams p;
  with(raw, "delta_t", [&](auto& v) { p.delta_t = to_double("delta_t", v); });
  with(raw, "delta_r", [&](auto& v) { p.delta_r = to_double("delta_r", v); });
  with(raw, "eps1", [&](auto& v) { p.eps1 = to_double("eps1", v); });
  with(raw, "eps2", [&](auto& v) { p.eps2 = to_double("eps2", v); });
  with(raw, "tau0", [&](auto& v) { p.tau0 = to_double("tau0", v); });
  with(raw, "tau", [&](auto& v) { p.tau = to_double("tau", v); });
  with(raw, "xi", [&](auto& v) { p.xi = to_double("xi", v); });
  with(raw, "l_ao", [&](auto& v) { p.l_ao = to_int("l_ao", v); });
  with(raw, "l_de", [&](auto& v) { p.l_de = to_int("l_de", v); });
  with(raw, "l_t_hat", [&](auto& v) { p.l_t_hat = to_int("l_t_hat", v); });
  with(raw, "l_r_hat", [&](auto& v) { p.l_r_hat = to_int("l_r_hat", v); });
  with(raw, "de_tol", [&](auto& v) { p.de_tol = to_double("de_tol", v); });
  with(raw, "mc_samples", [&](auto& v) { p.mc_samples = to_int("mc_samples", v); });
  with(raw, "absolute_tx_shortcut",
       [&](auto& v) { p.absolute_tx_shortcut = to_bool("absolute_tx_shortcut", v); });
  with(raw, "quadratic_armijo", [&](auto& v) { p.quadratic_armijo = to_bool("quadratic_armijo", v); });
  p.validate();
  return p;
}

std::string canonical_text(const RawConfig& raw) {
  std::ostringstream os;
  for (const auto& [k, v] : raw) os << k << '=' << v << '\n';
  return os.str();
}

std::string config_hash(const RawConfig& raw) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical_text(raw)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over a stream-offset state
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

PathAngles sample_angles(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  const double v = unit(rng);
  return {kPi * v, std::acos(1.0 - 2.0 * u)};
}

ScsiState make_scsi(const Scenario& scenario, std::vector<PathAngles> tx_angles,
                    std::vector<PathAngles> rx_angles, double distance) {
  if (static_cast<int>(tx_angles.size()) != scenario.l_tx ||
      static_cast<int>(rx_angles.size()) != scenario.l_rx)
    throw DimensionError("angle lists do not match the scenario path counts");
  ScsiState s;
  s.tx_angles = std::move(tx_angles);
  s.rx_angles = std::move(rx_angles);
  s.distance = distance;
  s.gain = scenario.pathloss_c0 * std::pow(distance, -scenario.pathloss_exp);
  s.sigma_bar = CMat::Zero(scenario.l_rx, scenario.l_tx);
  s.gain_mat = RMat::Zero(scenario.l_rx, scenario.l_tx);
  const int l = std::min(scenario.l_tx, scenario.l_rx);
  const double k = scenario.rician_k;
  if (l == 1) {
    s.sigma_bar(0, 0) = std::sqrt(s.gain);
  } else {
    s.sigma_bar(0, 0) = std::sqrt(s.gain * k / (k + 1.0));
    const double nlos = std::sqrt(s.gain / ((l - 1) * (k + 1.0)));
    for (int i = 1; i < l; ++i) s.gain_mat(i, i) = nlos;
  }
  return s;
}

ScsiState sample_scsi(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  Rng rng(seed);
  std::uniform_real_distribution<double> dist(scenario.dist_min, scenario.dist_max);
  const double d = dist(rng);
  std::vector<PathAngles> tx(static_cast<std::size_t>(scenario.l_tx));
  std::vector<PathAngles> rx(static_cast<std::size_t>(scenario.l_rx));
  for (auto& a : tx) a = sample_angles(rng);
  for (auto& a : rx) a = sample_angles(rng);
  return make_scsi(scenario, std::move(tx), std::move(rx), d);
}

CMat field_response(const Apv& apv, const std::vector<PathAngles>& angles) {
  const auto l = static_cast<Eigen::Index>(angles.size());
  const auto n = static_cast<Eigen::Index>(apv.size());
  CMat g(l, n);
  for (Eigen::Index i = 0; i < l; ++i) {
    const auto& a = angles[static_cast<std::size_t>(i)];
    const double cx = std::sin(a.theta) * std::cos(a.phi);
    const double cy = std::cos(a.theta);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& p = apv[static_cast<std::size_t>(j)];
      g(i, j) = std::polar(1.0, 2.0 * kPi * (p.x * cx + p.y * cy));
    }
  }
  return g;
}

CMat sample_channel(const ScsiState& scsi, const CMat& g, const CMat& f, Rng& rng) {
  const auto lr = scsi.sigma_bar.rows();
  const auto lt = scsi.sigma_bar.cols();
  if (g.rows() != lt || f.rows() != lr || scsi.gain_mat.rows() != lr || scsi.gain_mat.cols() != lt)
    throw DimensionError("sample_channel: field-response / path-matrix dimensions disagree");
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CMat sigma = scsi.sigma_bar;
  for (Eigen::Index j = 0; j < lt; ++j)
    for (Eigen::Index i = 0; i < lr; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      sigma(i, j) += scsi.gain_mat(i, j) * cplx(re, im);
    }
  return f.adjoint() * sigma * g;
}

Apv upa_layout(double region_side, int count, double pitch) {
  if (count < 1) throw ConfigError("antenna count must be >= 1");
  if (!layout_fits(region_side, count, pitch))
    throw InfeasibleError("region cannot host feasible layout");
  const int k = grid_side(count);
  const double h = region_side / 2.0;
  const double start = -0.5 * (k - 1) * pitch;
  std::vector<Position> p;
  p.reserve(static_cast<std::size_t>(count));
  for (int idx = 0; idx < count; ++idx) {
    const int row = idx / k;
    const int col = idx % k;
    p.push_back({std::clamp(start + col * pitch, -h, h), std::clamp(start + row * pitch, -h, h)});
  }
  return Apv(std::move(p));
}

Apv initial_layout(double region_side, int count, double min_dist) {
  if (count < 1) throw ConfigError("antenna count must be >= 1");
  if (count == 1) return Apv({Position{0.0, 0.0}});
  const int k = grid_side(count);
  if (!layout_fits(region_side, count, min_dist))
    throw InfeasibleError("region cannot host feasible layout");
  // Spans the whole square; the pitch is >= min_dist once layout_fits holds.
  return upa_layout(region_side, count, region_side / (k - 1));
}

}  // namespace maee
