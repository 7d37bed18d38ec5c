// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "test_support.hpp"

using namespace maee;

TEST_CASE("defaults build a valid scenario") {
  const Scenario s = build_scenario({});
  CHECK(s.n_tx == 4);
  CHECK(s.n_rx == 4);
  CHECK(s.l_tx == 5);
  CHECK(s.min_dist == doctest::Approx(0.5));
  CHECK(s.region_tx == doctest::Approx(2.0));
  CHECK(s.noise_power == doctest::Approx(1e-11));
  CHECK(s.p_max == doctest::Approx(1.0));
  CHECK(s.p_static == doctest::Approx(10.0));
  CHECK(s.amp_eff == doctest::Approx(5.0));
  CHECK(s.rician_k == doctest::Approx(10.0));
}

TEST_CASE("config validation") {
  SUBCASE("min distance below half a wavelength") {
    CHECK_THROWS_WITH_AS(build_scenario({{"d_min_wl", "0.4"}}), "min distance below lambda/2",
                         ConfigError);
  }
  SUBCASE("sixteen antennas do not fit a one-wavelength square") {
    CHECK_THROWS_WITH_AS(build_scenario({{"n", "16"}, {"x_region_wl", "1"}}),
                         "region cannot host feasible layout", ConfigError);
  }
  SUBCASE("unknown keys and malformed values") {
    CHECK_THROWS_AS(check_known_keys({{"bogus", "1"}}), ConfigError);
    CHECK_THROWS_AS(build_scenario({{"n", "four"}}), ConfigError);
    CHECK_THROWS_AS(build_solver_params({{"l_ao", "0"}}), ConfigError);
  }
  SUBCASE("dBm fields convert once") {
    const Scenario s = build_scenario({{"p_max_dbm", "40"}, {"sigma2_dbm", "-90"}});
    CHECK(s.p_max == doctest::Approx(10.0));
    CHECK(s.noise_power == doctest::Approx(1e-12));
  }
}

TEST_CASE("config text parsing and hashing") {
  const RawConfig a = parse_config_text("# comment\nn = 4\n  p_max_dbm=30 # trailing\n");
  CHECK(a.at("n") == "4");
  CHECK(a.at("p_max_dbm") == "30");
  const RawConfig b = parse_config_text("p_max_dbm = 30\nn = 4\n");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(parse_config_text("n = 5\np_max_dbm = 30\n")));
  CHECK(config_hash(a).size() == 16);
  CHECK_THROWS_AS(parse_config_text("novalue\n"), ConfigError);
}

TEST_CASE("S-CSI path matrices") {
  SUBCASE("Rician split with unit gain") {
    Scenario sc;
    std::vector<PathAngles> a(5);
    ScsiState s = make_scsi(sc, a, a, 1.0);
    // Rescale to g = 1 for the closed-form check.
    const double g = s.gain;
    CHECK(std::abs(s.sigma_bar(0, 0)) / std::sqrt(g) == doctest::Approx(std::sqrt(10.0 / 11.0)).epsilon(1e-12));
    CHECK(std::sqrt(10.0 / 11.0) == doctest::Approx(0.95346).epsilon(1e-5));
    for (int l = 1; l < 5; ++l)
      CHECK(s.gain_mat(l, l) / std::sqrt(g) == doctest::Approx(std::sqrt(1.0 / 44.0)).epsilon(1e-12));
    CHECK(std::sqrt(1.0 / 44.0) == doctest::Approx(0.15076).epsilon(1e-4));
    CHECK(s.gain_mat(0, 0) == 0.0);
    CHECK(s.gain_mat(1, 2) == 0.0);
  }
  SUBCASE("pure-LOS limit") {
    Scenario sc;
    sc.rician_k = 1e12;
    const ScsiState s = sample_scsi(sc, 3);
    CHECK(s.gain_mat.maxCoeff() < 1e-6 * std::sqrt(s.gain));
    CHECK(std::abs(s.sigma_bar(0, 0)) == doctest::Approx(std::sqrt(s.gain)).epsilon(1e-9));
  }
  SUBCASE("single path carries all power on the LOS entry") {
    Scenario sc;
    sc.l_tx = sc.l_rx = 1;
    const ScsiState s = sample_scsi(sc, 9);
    CHECK(std::abs(s.sigma_bar(0, 0)) == doctest::Approx(std::sqrt(s.gain)));
    CHECK(s.gain_mat(0, 0) == 0.0);
  }
  SUBCASE("distance within range and seeded determinism") {
    Scenario sc;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const ScsiState s = sample_scsi(sc, seed);
      CHECK(s.distance >= sc.dist_min);
      CHECK(s.distance <= sc.dist_max);
      const ScsiState t = sample_scsi(sc, seed);
      CHECK(s.distance == t.distance);
      CHECK(s.tx_angles[2].phi == t.tx_angles[2].phi);
    }
  }
}

TEST_CASE("angle sampler matches the sin(phi)/(2 pi) density") {
  Rng rng(12345);
  std::vector<double> phis;
  std::vector<double> thetas;
  for (int i = 0; i < 100000; ++i) {
    const PathAngles a = sample_angles(rng);
    phis.push_back(a.phi);
    thetas.push_back(a.theta);
  }
  const double pi = std::numbers::pi;
  CHECK(test::ks_distance(phis, [](double x) { return (1.0 - std::cos(x)) / 2.0; }) < 0.01);
  CHECK(test::ks_distance(thetas, [pi](double x) { return x / pi; }) < 0.01);
}

TEST_CASE("field response") {
  std::vector<PathAngles> angles;
  Rng rng(1);
  for (int i = 0; i < 5; ++i) angles.push_back(sample_angles(rng));
  SUBCASE("origin gives all ones") {
    const Apv origin(std::vector<Position>(4, Position{0.0, 0.0}));
    CHECK((field_response_tx(origin, angles) - CMat::Ones(5, 4)).norm() == 0.0);
    CHECK((field_response_rx(origin, angles) - CMat::Ones(5, 4)).norm() == 0.0);
  }
  SUBCASE("half-wavelength offset along x flips the sign") {
    const CMat g = field_response_tx(Apv({Position{0.5, 0.0}}), {PathAngles{std::numbers::pi / 2, 0.0}});
    CHECK(g(0, 0).real() == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(g(0, 0).imag()) < 1e-12);
  }
  SUBCASE("theta = 0 depends on y only") {
    const Apv r({Position{0.3, 0.2}, Position{-0.7, 0.45}});
    const CMat f = field_response_rx(r, {PathAngles{0.0, 1.1}});
    for (int m = 0; m < 2; ++m)
      CHECK(std::abs(f(0, m) - std::polar(1.0, 2.0 * std::numbers::pi * r[m].y)) < 1e-12);
  }
  SUBCASE("unit modulus everywhere") {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Position> p;
    for (int i = 0; i < 6; ++i) p.push_back({u(rng), u(rng)});
    const CMat g = field_response(Apv(p), angles);
    CHECK((g.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("channel sampling") {
  const Scenario sc;
  const ScsiState scsi = sample_scsi(sc, 17);
  const Apv t = initial_layout(2.0, 4, 0.5);
  const Apv r = upa_layout(2.0, 4, 0.5);
  const CMat g = field_response_tx(t, scsi.tx_angles);
  const CMat f = field_response_rx(r, scsi.rx_angles);
  SUBCASE("pure LOS is deterministic") {
    const ScsiState los = test::los_only(scsi);
    Rng rng(5);
    const CMat h = sample_channel(los, g, f, rng);
    CHECK((h - f.adjoint() * los.sigma_bar * g).norm() == doctest::Approx(0.0));
  }
  SUBCASE("second moment equals the path gain") {
    Rng rng(6);
    RMat acc = RMat::Zero(4, 4);
    const int n = 100000;
    for (int i = 0; i < n; ++i) acc += sample_channel(scsi, g, f, rng).cwiseAbs2();
    acc /= n;
    CHECK((acc.array() / scsi.gain - 1.0).abs().maxCoeff() < 0.02);
  }
  SUBCASE("seeded determinism") {
    Rng a(99);
    Rng b(99);
    CHECK((sample_channel(scsi, g, f, a) - sample_channel(scsi, g, f, b)).norm() == 0.0);
  }
}

TEST_CASE("layouts") {
  SUBCASE("four antennas in two wavelengths") {
    const Apv a = initial_layout(2.0, 4, 0.5);
    CHECK(a.size() == 4);
    CHECK(a.min_pairwise_distance() >= 0.5);
    CHECK(a.feasible(2.0, 0.5));
  }
  SUBCASE("single antenna sits at the center") {
    const Apv a = initial_layout(2.0, 1, 0.5);
    CHECK(a.size() == 1);
    CHECK(a[0].x == 0.0);
    CHECK(a[0].y == 0.0);
  }
  SUBCASE("nine antennas form a 3x3 grid at 1 wavelength pitch") {
    const Apv a = initial_layout(2.0, 9, 0.5);
    CHECK(a.feasible(2.0, 0.5));
    CHECK(a.min_pairwise_distance() == doctest::Approx(1.0));
  }
  SUBCASE("UPA at half-wavelength pitch is centered") {
    const Apv a = upa_layout(2.0, 4, 0.5);
    double cx = 0.0;
    double cy = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      cx += a[i].x;
      cy += a[i].y;
    }
    CHECK(cx == doctest::Approx(0.0));
    CHECK(cy == doctest::Approx(0.0));
    CHECK(a.min_pairwise_distance() == doctest::Approx(0.5));
  }
  SUBCASE("random feasible layouts") {
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
      const Apv a = sample_feasible_layout(2.0, 4, 0.5, rng);
      CHECK(test::independently_feasible(a, 2.0, 0.5));
    }
    // Crowded enough to need the jitter fallback at times.
    const Apv dense = sample_feasible_layout(2.0, 16, 0.5, rng);
    CHECK(test::independently_feasible(dense, 2.0, 0.5));
  }
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}
