#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "swapsim/config.h"

using namespace swapsim;

TEST_CASE("empty input gives the defaults") {
  const ExperimentConfig defaults;
  CHECK(parse_config_text("") == defaults);
  CHECK(parse_config_text("# nothing here\n") == defaults);
  CHECK(defaults.sources[0].mu == 0.1);
  CHECK(defaults.sources[0].purity == 0.82);
  CHECK(defaults.detector.eta_max == 0.79);
  CHECK(defaults.rep_rate == 76e6);
  CHECK(defaults.detector.dead_time_pulses == 3);
  CHECK(defaults.fwhm_nm == 1.2);
  CHECK(defaults.center_nm == 1584.0);
  CHECK(detector_params(defaults, SetupKind::Swap, Port::P7).dark_prob == doctest::Approx(2.63e-5).epsilon(1e-3));
}

TEST_CASE("errors name the key and constraint") {
  CHECK_THROWS_WITH_AS(parse_config_text("sources: {mu: -0.1}"), doctest::Contains("mu"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("sources: {mu: -0.1}"), doctest::Contains("≥ 0"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("sources: [{mu: 0.1}, {mu: -2}]"), doctest::Contains("sources[1].mu"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("detector: {colour: red}"), doctest::Contains("detector.colour: unknown key"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("pulses: lots"), doctest::Contains("pulses"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("delays_ps: [-1, 0, 2]"), doctest::Contains("symmetric"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("preset: fig9"), doctest::Contains("fig5b"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[1, 2"), ConfigError);
  CHECK_THROWS_AS(parse_config("/nonexistent/config.yaml"), ConfigError);
}

TEST_CASE("presets") {
  const auto b = parse_config_text("preset: fig5b");
  CHECK(b.sources[0].mu == 0.05);
  CHECK(b.sources[1].mu == 0.053);
  const auto a = preset_config("fig5a");
  CHECK(a.sources[0].mu == 0.1);
  CHECK(a.sources[1].mu == 0.106);
  // Two filters: ch1 and ch4.
  REQUIRE(a.sources[0].filter);
  REQUIRE(a.sources[1].filter);
  CHECK(a.sources[0].filter->on_arm_a);
  CHECK_FALSE(a.sources[0].filter->on_arm_b);
  CHECK_FALSE(a.sources[1].filter->on_arm_a);
  CHECK(a.sources[1].filter->on_arm_b);
  CHECK(a.sources[0].filter->purity_after == 0.851);
  CHECK(preset_config("fig3a").sources[0].purity == 0.784);
  CHECK(preset_config("fig3c").sources[1].filter->purity_after == 0.872);
  CHECK(preset_config("table1").teleport.settings.size() == 8);

  // Explicit keys override the preset.
  const auto o = parse_config_text("preset: fig5b\nseed: 9\nsources: {mu: 0.02}");
  CHECK(o.seed == 9);
  CHECK(o.sources[1].mu == 0.02);
  CHECK(o.sources[1].filter);
}

TEST_CASE("emit and parse round trip") {
  std::vector<ExperimentConfig> configs{ExperimentConfig{}};
  for (const auto& n : preset_names()) configs.push_back(preset_config(n));
  ExperimentConfig odd;
  odd.seed = 123456789012345ULL;
  odd.pulses = 7;
  odd.nmax = 2;
  odd.rep_rate = 1.5e8;
  odd.sources[1].bell = BellState::PhiPlus;
  odd.sources[1].werner = 0.125;
  odd.sources[0].label_truncation = 5;
  odd.sources[0].transmission_a = 0.1 + 0.2;  // not exactly representable
  odd.detector.model = DetectorModel::Polarization;
  odd.detector.axis_deg = 12.5;
  odd.delays_ps = {-3.3, 0.0, 3.3};
  odd.limits.require_both_sources = true;
  odd.rates.fourfold_setup = SetupKind::HomTeleport;
  odd.sweep.parameter = "rep_rate";
  odd.sweep.values = {76e6, 152e6};
  odd.validate.scenarios = {"swap"};
  odd.teleport.settings = {{10.0, 20.0}};
  configs.push_back(odd);
  for (const auto& c : configs) {
    const auto text = emit_config(c);
    CAPTURE(text);
    CHECK(parse_config_text(text) == c);
    CHECK(emit_config(parse_config_text(text)) == text);
  }
}

TEST_CASE("config files") {
  const std::string path = "test_config_tmp.yaml";
  {
    std::ofstream out(path);
    out << "seed: 5\npulses: 1000\nswap:\n  theta2: [0, 90]\n";
  }
  const auto c = parse_config(path);
  std::remove(path.c_str());
  CHECK(c.seed == 5);
  CHECK(c.pulses == 1000);
  CHECK(c.swap.theta2 == std::vector<double>{0.0, 90.0});
}

TEST_CASE("setup names") {
  for (auto k : {SetupKind::SourceTest, SetupKind::HomTeleport, SetupKind::Swap}) CHECK(parse_setup(setup_name(k)) == k);
  CHECK_THROWS_AS(parse_setup("teleport-ish"), ConfigError);
}
