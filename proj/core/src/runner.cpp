// SPDX-License-Identifier: Apache-2.0
#include "maee/runner.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "maee/parallel.hpp"

namespace maee {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig RunConfig::from_raw(RawConfig raw) {
  check_known_keys(raw);
  RunConfig c;
  c.scenario = build_scenario(raw);
  c.params = build_solver_params(raw);
  c.hash = config_hash(raw);
  c.raw = std::move(raw);
  return c;
}

RunConfig RunConfig::with(const std::string& key, const std::string& value) const {
  RawConfig r = raw;
  r[key] = value;
  return from_raw(std::move(r));
}

SweepVar parse_sweep_var(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "pmax" || s == "p_max_dbm") return SweepVar::PMaxDbm;
  if (s == "region" || s == "x_region_wl") return SweepVar::RegionWl;
  throw ConfigError("unknown sweep variable '" + name + "' (expected pmax or region)");
}

std::string sweep_var_name(SweepVar var) {
  return var == SweepVar::PMaxDbm ? "p_max_dbm" : "x_region_wl";
}

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (schemes.empty()) throw ConfigError("sweep needs at least one scheme");
  if (n_draws < 1) throw ConfigError("n_draws must be >= 1");
  for (double v : values)
    if (!std::isfinite(v)) throw ConfigError("sweep values must be finite");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

namespace {

constexpr std::uint64_t kMcStream = 0x76616c2d6d63ULL;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw std::runtime_error("cannot create output directory '" + dir + "'");
}

std::string join(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json apv_json(const Apv& a) {
  json out = json::array();
  for (const auto& p : a.positions()) out.push_back({p.x, p.y});
  return out;
}

json config_json(const RawConfig& raw) {
  json out = json::object();
  for (const auto& [k, v] : raw) out[k] = v;
  return out;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << kResultsHeader << '\n';
  for (const auto& r : rows)
    os << r.sweep_var << ',' << format_double(r.value) << ',' << r.scheme << ','
       << format_double(r.ee_mean) << ',' << format_double(r.ee_stderr) << ',' << r.n_draws << ','
       << r.seed << ',' << r.config_hash << '\n';
  return os.str();
}

}  // namespace

SweepOutcome cmd_sweep(const RunConfig& config, const SweepSpec& spec) {
  spec.validate();
  const std::string key = sweep_var_name(spec.var);
  // Build every point's config first so a bad value fails before any work.
  std::vector<RunConfig> configs;
  configs.reserve(spec.values.size());
  for (double v : spec.values) configs.push_back(config.with(key, format_double(v)));

  const bool persist = !spec.output_dir.empty();
  if (persist) ensure_dir(spec.output_dir);
  const std::string started = utc_now();
  const auto t_start = std::chrono::steady_clock::now();

  SweepOutcome out;
  std::vector<double> point_seconds;
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    const RunConfig& c = configs[i];
    const AoOptions options = make_ao_options(c.params);
    for (const Scheme& scheme : spec.schemes) {
      const auto t0 = std::chrono::steady_clock::now();
      SweepPoint pt;
      pt.value = spec.values[i];
      pt.ensemble = run_ensemble(c.scenario, scheme, spec.n_draws, spec.seed, options);
      point_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      out.rows.push_back({key, pt.value, scheme.name(), pt.ensemble.mean_ee, pt.ensemble.std_err,
                          spec.n_draws, spec.seed, c.hash});
      out.points.push_back(std::move(pt));
    }
    if (persist) write_atomic(join(spec.output_dir, "results.csv"), results_csv(out.rows));
  }
  if (!persist) return out;

  // plot_data.csv: one row per sweep value, mean and standard error per scheme.
  std::ostringstream plot;
  plot << key;
  for (const auto& s : spec.schemes) plot << ',' << s.name() << ',' << s.name() << "_stderr";
  plot << '\n';
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    plot << format_double(spec.values[i]);
    for (std::size_t k = 0; k < spec.schemes.size(); ++k) {
      const auto& e = out.points[i * spec.schemes.size() + k].ensemble;
      plot << ',' << format_double(e.mean_ee) << ',' << format_double(e.std_err);
    }
    plot << '\n';
  }
  write_atomic(join(spec.output_dir, "plot_data.csv"), plot.str());

  std::ostringstream draws;
  std::ostringstream designs;
  draws << "value,scheme,draw,draw_seed,distance_m,de_ee,mc_ee,ao_rounds,config_hash\n";
  designs << "value,scheme,draw,side,antenna,x,y,region_side,min_dist\n";
  for (std::size_t p = 0; p < out.points.size(); ++p) {
    const auto& pt = out.points[p];
    const Scenario& sc = configs[p / spec.schemes.size()].scenario;
    const std::string v = format_double(pt.value);
    const std::string name = pt.ensemble.scheme.name();
    for (const auto& r : pt.ensemble.records) {
      draws << v << ',' << name << ',' << r.draw << ',' << r.seed << ',' << format_double(r.distance)
            << ',' << format_double(r.de_ee) << ',' << format_double(r.mc_ee) << ',' << r.iters
            << ',' << configs[p / spec.schemes.size()].hash << '\n';
      const auto emit = [&](const Apv& a, const char* side, double region) {
        for (std::size_t k = 0; k < a.size(); ++k)
          designs << v << ',' << name << ',' << r.draw << ',' << side << ',' << k << ','
                  << format_double(a[k].x) << ',' << format_double(a[k].y) << ','
                  << format_double(region) << ',' << format_double(sc.min_dist) << '\n';
      };
      emit(r.final_t, "tx", sc.region_tx);
      emit(r.final_r, "rx", sc.region_rx);
    }
  }
  write_atomic(join(spec.output_dir, "draws.csv"), draws.str());
  write_atomic(join(spec.output_dir, "designs.csv"), designs.str());

  json manifest;
  manifest["command"] = "sweep";
  manifest["sweep_var"] = key;
  manifest["values"] = spec.values;
  json schemes = json::array();
  for (const auto& s : spec.schemes) schemes.push_back(s.name());
  manifest["schemes"] = schemes;
  manifest["n_draws"] = spec.n_draws;
  manifest["seed"] = spec.seed;
  manifest["config_hash"] = config.hash;
  manifest["config"] = config_json(config.raw);
  json point_hashes = json::object();
  for (std::size_t i = 0; i < spec.values.size(); ++i)
    point_hashes[format_double(spec.values[i])] = configs[i].hash;
  manifest["point_config_hashes"] = point_hashes;
  manifest["files"] = {"results.csv", "plot_data.csv", "draws.csv", "designs.csv"};
  manifest["timing"] = {
      {"started_utc", started},
      {"elapsed_s",
       std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count()},
      {"point_s", point_seconds},
      {"workers", worker_count()}};
  write_atomic(join(spec.output_dir, "manifest.json"), dump(manifest));
  return out;
}

Apv sample_feasible_layout(double side, int count, double min_dist, Rng& rng) {
  if (count < 1) throw ConfigError("antenna count must be >= 1");
  std::uniform_real_distribution<double> coord(-0.5 * side, 0.5 * side);
  const double d2 = min_dist * min_dist;
  // Whether c keeps min_dist from every point except pts[skip].
  auto clear = [&](const std::vector<Position>& pts, const Position& c, std::size_t skip) {
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double dx = pts[k].x - c.x;
      const double dy = pts[k].y - c.y;
      if (k != skip && dx * dx + dy * dy < d2) return false;
    }
    return true;
  };
  for (int restart = 0; restart < 200; ++restart) {
    std::vector<Position> pts;
    for (int tries = 0; tries < 2000 && static_cast<int>(pts.size()) < count; ++tries) {
      const Position c{coord(rng), coord(rng)};
      if (clear(pts, c, pts.size())) pts.push_back(c);
    }
    if (static_cast<int>(pts.size()) == count) return Apv(std::move(pts));
  }
  // Crowded regions: random local moves away from the grid keep feasibility.
  Apv grid = upa_layout(side, count, std::max(0.5, min_dist));
  std::vector<Position> pts = grid.positions();
  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  for (int sweep = 0; sweep < 50; ++sweep)
    for (std::size_t k = 0; k < pts.size(); ++k) {
      Position c{std::clamp(pts[k].x + jitter(rng), -0.5 * side, 0.5 * side),
                 std::clamp(pts[k].y + jitter(rng), -0.5 * side, 0.5 * side)};
      if (clear(pts, c, k)) pts[k] = c;
    }
  return Apv(std::move(pts));
}

CovMatrix sample_covariance(int n, double p_max, Rng& rng) {
  if (n < 1) throw ConfigError("covariance dimension must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CMat z(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) z(i, j) = cplx(normal(rng), normal(rng));
  Eigen::HouseholderQR<CMat> qr(z);
  CMat u = qr.householderQ() * CMat::Identity(n, n);
  const CMat r = qr.matrixQR();
  for (int k = 0; k < n; ++k) {
    const double a = std::abs(r(k, k));
    if (a > 0.0) u.col(k) *= r(k, k) / a;
  }
  RVec p(n);
  for (int k = 0; k < n; ++k) p(k) = -std::log(1.0 - unit(rng));
  const double total = p_max * (0.1 + 0.9 * unit(rng));
  p *= total / p.sum();
  return CovMatrix::from_eigen(u, p);
}

ValidationInstance sample_instance(const Scenario& sc, std::uint64_t seed) {
  ValidationInstance inst;
  inst.scsi = sample_scsi(sc, seed);
  Rng rng(derive_seed(seed, 1));
  inst.apv_t = sample_feasible_layout(sc.region_tx, sc.n_tx, sc.min_dist, rng);
  inst.apv_r = sample_feasible_layout(sc.region_rx, sc.n_rx, sc.min_dist, rng);
  inst.q = sample_covariance(sc.n_tx, sc.p_max, rng);
  return inst;
}

ValidationReport cmd_validate_de(const RunConfig& config, int n_instances, std::uint64_t seed,
                                 double bound, const std::string& output_dir) {
  if (n_instances < 1) throw ConfigError("n_instances must be >= 1");
  if (!(bound > 0.0)) throw ConfigError("validation bound must be positive");
  const Scenario& sc = config.scenario;
  const SolverParams& sp = config.params;
  const bool persist = !output_dir.empty();
  if (persist) ensure_dir(output_dir);
  const std::string started = utc_now();
  const auto t_start = std::chrono::steady_clock::now();

  DeOptions de;
  de.tol = sp.de_tol;
  de.max_iters = sp.l_de;
  ValidationReport rep;
  rep.bound = bound;
  rep.records.resize(static_cast<std::size_t>(n_instances));
  parallel_for(static_cast<std::size_t>(n_instances), [&](std::size_t i) {
    const std::uint64_t s = derive_seed(seed, i);
    const ValidationInstance inst = sample_instance(sc, s);
    const DeEvaluation ev = evaluate_de(sc, inst.scsi, inst.apv_t, inst.apv_r, inst.q, de);
    const DeProblem p = DeProblem::build(sc, inst.scsi, inst.apv_t, inst.apv_r, inst.q);
    const RateEstimate mc =
        mc_average_rate(sc, inst.scsi, inst.apv_t, inst.apv_r, inst.q, sp.mc_samples,
                        derive_seed(s, kMcStream));
    ValidationRecord& r = rep.records[i];
    r.instance = static_cast<int>(i);
    r.seed = s;
    r.de_rate_t = ev.rate;
    r.de_rate_r = de_rate_rx(ev.de, p);
    r.mc_rate = mc.mean;
    r.mc_stderr = mc.std_err;
    r.rel_err = std::abs(r.de_rate_t - r.mc_rate) / std::max(std::abs(r.mc_rate), 1e-300);
    r.side_gap = std::abs(r.de_rate_r - r.de_rate_t) / std::max(std::abs(r.de_rate_t), 1e-300);
  });

  std::vector<double> errs;
  for (const auto& r : rep.records) {
    errs.push_back(r.rel_err);
    rep.max_rel_err = std::max(rep.max_rel_err, r.rel_err);
    rep.max_side_gap = std::max(rep.max_side_gap, r.side_gap);
  }
  std::sort(errs.begin(), errs.end());
  const std::size_t m = errs.size();
  rep.median_rel_err = m % 2 ? errs[m / 2] : 0.5 * (errs[m / 2 - 1] + errs[m / 2]);
  rep.pass = rep.max_rel_err <= bound;

  if (persist) {
    json j;
    j["command"] = "validate-de";
    j["seed"] = seed;
    j["n_instances"] = n_instances;
    j["mc_samples"] = sp.mc_samples;
    j["config_hash"] = config.hash;
    j["config"] = config_json(config.raw);
    j["bound"] = bound;
    j["max_rel_err"] = rep.max_rel_err;
    j["median_rel_err"] = rep.median_rel_err;
    j["max_side_gap"] = rep.max_side_gap;
    j["pass"] = rep.pass;
    json recs = json::array();
    for (const auto& r : rep.records)
      recs.push_back({{"instance", r.instance},
                      {"seed", r.seed},
                      {"de_rate_t", r.de_rate_t},
                      {"de_rate_r", r.de_rate_r},
                      {"mc_rate", r.mc_rate},
                      {"mc_stderr", r.mc_stderr},
                      {"rel_err", r.rel_err},
                      {"side_gap", r.side_gap}});
    j["instances"] = recs;
    j["timing"] = {
        {"started_utc", started},
        {"elapsed_s",
         std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count()}};
    write_atomic(join(output_dir, "validate_de.json"), dump(j));
  }
  return rep;
}

AoReport cmd_single(const RunConfig& config, const Scheme& scheme, std::uint64_t seed,
                    const std::string& output_dir) {
  const Scenario& sc = config.scenario;
  const bool persist = !output_dir.empty();
  if (persist) ensure_dir(output_dir);
  const std::string started = utc_now();
  const ScsiState scsi = sample_scsi(sc, seed);
  AoReport rep = run_ao(sc, scsi, scheme, make_ao_options(config.params), seed);
  if (!persist) return rep;

  json j;
  j["command"] = "single";
  j["scheme"] = scheme.name();
  j["seed"] = seed;
  j["config_hash"] = config.hash;
  j["config"] = config_json(config.raw);
  j["distance_m"] = scsi.distance;
  j["region_tx"] = sc.region_tx;
  j["region_rx"] = sc.region_rx;
  j["min_dist"] = sc.min_dist;
  j["ee_per_iter"] = rep.ee_per_iter;
  j["ao_rounds"] = rep.iters;
  j["de_rate"] = rep.de_rate_final;
  j["de_ee"] = rep.de_ee_final;
  j["mc_rate"] = {{"mean", rep.mc_rate.mean},
                  {"stderr", rep.mc_rate.std_err},
                  {"samples", rep.mc_rate.n_samples}};
  j["mc_ee"] = rep.mc_ee_final;
  j["final_t"] = apv_json(rep.final_t);
  j["final_r"] = apv_json(rep.final_r);
  const RVec eig = rep.final_q.eigenvalues();
  j["q_eigenvalues"] = std::vector<double>(eig.data(), eig.data() + eig.size());
  j["q_trace"] = rep.final_q.trace();
  j["notes"] = rep.notes;
  j["timing"] = {{"started_utc", started},
                 {"init_s", rep.timings.init},
                 {"tx_s", rep.timings.tx},
                 {"rx_s", rep.timings.rx},
                 {"mc_s", rep.timings.mc}};
  write_atomic(join(output_dir, "single.json"), dump(j));
  return rep;
}

}  // namespace maee
