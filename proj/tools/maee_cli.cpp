// SPDX-License-Identifier: Apache-2.0
// maee: batch front end for sweeps, single runs and DE validation.
//
// Exit codes: 0 success, 1 runtime failure (or failed validation), 2 usage
// or configuration error.
#include <cstdint>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "maee/runner.hpp"

namespace {

using namespace maee;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  for (const auto& s : split_list(text)) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size()) throw ConfigError("--values: not a number: '" + s + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--values: empty list");
  return out;
}

std::vector<Scheme> parse_schemes(const std::string& text) {
  std::vector<Scheme> out;
  for (const auto& s : split_list(text)) out.push_back(Scheme::parse(s));
  if (out.empty()) throw ConfigError("--scheme: empty scheme list");
  return out;
}

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
  int mc_samples = 0;  // 0 keeps the config value
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Flat key = value config file (omitted keys keep the built-in defaults)");
  cmd->add_option("--seed", c.seed, "Master RNG seed");
  cmd->add_option("--out", c.out, "Output directory (nothing is written when omitted)");
  cmd->add_option("--mc-samples", c.mc_samples, "Monte Carlo samples for final evaluation")
      ->check(CLI::PositiveNumber);
}

RunConfig load(const Common& c) {
  RawConfig raw = c.config.empty() ? RawConfig{} : read_config_file(c.config);
  if (c.mc_samples > 0) raw["mc_samples"] = std::to_string(c.mc_samples);
  return RunConfig::from_raw(std::move(raw));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-efficiency design for movable-antenna MIMO links under statistical CSI"};
  app.require_subcommand(1);

  Common sweep_c;
  std::string sweep_var = "pmax";
  std::string values;
  std::string sweep_schemes = "ma,tma,rma,upa";
  int draws = 50;
  auto* sweep = app.add_subcommand("sweep", "EE versus P_max or region size for several schemes");
  add_common(sweep, sweep_c);
  sweep->add_option("--sweep", sweep_var, "Swept variable: pmax (dBm) or region (wavelengths)");
  sweep->add_option("--values", values, "Comma-separated sweep values")->required();
  sweep->add_option("--scheme", sweep_schemes, "Comma-separated schemes among ma,tma,rma,upa");
  sweep->add_option("--draws", draws, "S-CSI draws per point");

  Common single_c;
  std::string single_scheme = "ma";
  auto* single = app.add_subcommand("single", "One AO run with a full JSON report");
  add_common(single, single_c);
  single->add_option("--scheme", single_scheme, "One of ma, tma, rma, upa");

  Common val_c;
  int instances = 20;
  double bound = 0.05;
  auto* validate = app.add_subcommand("validate-de", "Compare the DE rate with Monte Carlo");
  add_common(validate, val_c);
  validate->add_option("--draws", instances, "Number of random operating points");
  validate->add_option("--bound", bound, "Pass threshold on the max relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sweep) {
      SweepSpec spec;
      spec.var = parse_sweep_var(sweep_var);
      spec.values = parse_values(values);
      spec.schemes = parse_schemes(sweep_schemes);
      spec.n_draws = draws;
      spec.seed = sweep_c.seed;
      spec.output_dir = sweep_c.out;
      const RunConfig cfg = load(sweep_c);
      const SweepOutcome res = cmd_sweep(cfg, spec);
      std::cout << kResultsHeader << '\n';
      for (const auto& r : res.rows)
        std::cout << r.sweep_var << ',' << format_double(r.value) << ',' << r.scheme << ','
                  << format_double(r.ee_mean) << ',' << format_double(r.ee_stderr) << ','
                  << r.n_draws << ',' << r.seed << ',' << r.config_hash << '\n';
      return 0;
    }
    if (*single) {
      const Scheme scheme = parse_schemes(single_scheme).at(0);
      const RunConfig cfg = load(single_c);
      const AoReport rep = cmd_single(cfg, scheme, single_c.seed, single_c.out);
      std::cout << "scheme " << scheme.name() << " seed " << single_c.seed << " rounds " << rep.iters
                << " de_ee " << format_double(rep.de_ee_final) << " mc_ee "
                << format_double(rep.mc_ee_final) << '\n';
      for (const auto& n : rep.notes) std::cerr << "note: " << n << '\n';
      return 0;
    }
    if (*validate) {
      const RunConfig cfg = load(val_c);
      const ValidationReport rep = cmd_validate_de(cfg, instances, val_c.seed, bound, val_c.out);
      for (const auto& r : rep.records)
        std::cout << "instance " << r.instance << " de " << format_double(r.de_rate_t) << " mc "
                  << format_double(r.mc_rate) << " rel_err " << format_double(r.rel_err) << '\n';
      std::cout << "max_rel_err " << format_double(rep.max_rel_err) << " median "
                << format_double(rep.median_rel_err) << " bound " << format_double(rep.bound)
                << (rep.pass ? " PASS" : " FAIL") << '\n';
      return rep.pass ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "maee: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "maee: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
