#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "swapsim/experiments.h"
#include "swapsim/rng.h"

using namespace swapsim;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// One pair per source, lossless unit-efficiency detection, no darks or dead time.
ExperimentConfig single_pair_ideal() {
  ExperimentConfig c;
  for (auto& s : c.sources) {
    s.purity = 1.0;
    s.transmission_a = s.transmission_b = 1.0;
  }
  c.limits.max_pairs_per_source = 1;
  c.limits.require_both_sources = true;
  c.detector.eta_max = c.detector.eta_min = 1.0;
  c.detector.dark_count_rate = 0.0;
  c.detector.dead_time_pulses = 0;
  c.delays_ps = {-8.0, 0.0, 8.0};
  c.pulses = 4000;
  return c;
}

}  // namespace

TEST_CASE("ideal algebra helpers") {
  Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    const double a = 180.0 * rng.uniform(), b = 180.0 * rng.uniform();
    CHECK(ideal::source_test_coincidence(a, b) == doctest::Approx(0.5 * std::pow(std::sin((a - b) * kDeg), 2)));
    CHECK(ideal::swap_fringe(a, b) == doctest::Approx(0.5 * std::pow(std::cos((a - b) * kDeg), 2)));
  }
  CHECK(ideal::bsm_coincidence(BellState::PhiPlus) < 1e-12);
  CHECK(ideal::teleport_fidelity({0.6, 0.0}, {0.0, 0.8}) == doctest::Approx(1.0).epsilon(1e-12));
  const auto sw = ideal::swap_conditional();
  CHECK(sw.probability > 0.0);
  CHECK(std::abs(sw.rho.trace() - 1.0) < 1e-12);
}

TEST_CASE("detector model selection") {
  ExperimentConfig c;
  CHECK_FALSE(detector_params(c, SetupKind::HomTeleport, Port::P5).matched);
  CHECK(detector_params(c, SetupKind::HomTeleport, Port::Ch2).matched);
  CHECK(detector_params(c, SetupKind::Swap, Port::P7).matched);
  c.detector.model = DetectorModel::Polarization;
  CHECK_FALSE(detector_params(c, SetupKind::Swap, Port::P7).matched);
  c.detector.model = DetectorModel::Matched;
  CHECK(detector_params(c, SetupKind::HomTeleport, Port::P6).matched);
}

TEST_CASE("ideal source test fringe") {
  auto c = single_pair_ideal();
  c.source_test.tested_sources = {1};
  c.source_test.theta1 = {0.0};
  c.source_test.theta2 = {0.0, 45.0, 90.0};
  const auto r = run_source_test(c);
  REQUIRE(r.curves.size() == 1);
  const auto& curve = r.curves[0];
  for (const auto& p : curve.points) {
    const double expect = c.pulses * 0.5 * std::pow(std::sin(p.x * kDeg), 2);
    CHECK(p.tally.expected_raw.value == doctest::Approx(expect).epsilon(1e-9));
  }
  CHECK(curve.points[0].tally.raw == 0);
  CHECK(curve.v_raw_expected.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(curve.v_raw.value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ideal teleport curves") {
  auto c = single_pair_ideal();
  c.teleport.settings = {{90.0, 90.0}, {90.0, 0.0}};
  const auto r = run_teleportation(c);
  REQUIRE(r.curves.size() == 2);
  CHECK(r.curves[0].dip);
  CHECK(r.curves[0].v_raw_expected.value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.curves[0].v_raw.value == doctest::Approx(1.0).epsilon(1e-9));
  const auto& flat = r.curves[1];
  CHECK(std::abs(flat.v_raw_expected.value) < 1e-6);
  CHECK(std::abs(flat.v_net.value) < 3.0 * flat.v_net.error);
  // One pair per source: blocked-arm passes see nothing.
  for (const auto& curve : r.curves)
    for (const auto& p : curve.points) {
      CHECK(p.tally.background1 == 0);
      CHECK(p.tally.background2 == 0);
      CHECK(p.tally.net() == static_cast<std::int64_t>(p.tally.raw));
    }
  for (const auto& curve : r.curves) CHECK(curve.physical);
}

TEST_CASE("one-pair HOM visibility follows the tilted label weights") {
  auto c = single_pair_ideal();
  for (auto& s : c.sources) {
    s.purity = 0.851;
    s.mu = 0.1;
  }
  c.pulses = 200000;
  const auto r = run_hom(c);
  // P(one pair in label k and none elsewhere) is proportional to m_k / (1 + m_k), m_k = mu lambda_k.
  const double x = (1.0 - 0.851) / (1.0 + 0.851);
  double norm = 0.0, sq = 0.0;
  for (int k = 0; k < 60; ++k) {
    const double lambda = (1.0 - x) * std::pow(x, k);
    const double p = lambda / (1.0 + 0.1 * lambda);
    norm += p;
    sq += p * p;
  }
  const auto v = r.curves.at(0).v_raw_expected;
  CHECK(std::abs(v.value - sq / (norm * norm)) < 3.0 * v.error + 1e-4);
}

TEST_CASE("rates without detection efficiency") {
  ExperimentConfig c;
  c.detector.eta_max = c.detector.eta_min = 0.0;
  c.pulses = 1'000'000;
  const auto r = run_rates(c);
  const double darks = c.detector.dark_count_rate * static_cast<double>(c.pulses) / c.rep_rate;
  for (double s : r.singles_cps) {
    const double n = s * static_cast<double>(c.pulses) / c.rep_rate;
    CHECK(std::abs(n - darks) < 3.0 * std::sqrt(darks) + 1.0);
  }
  CHECK(r.twofold_cps[0] == 0.0);
  CHECK(r.fourfold_cps == 0.0);
  CHECK(r.fourfold_cps_expected < 1e-3);
}

TEST_CASE("ten decibels of loss per arm") {
  ExperimentConfig base;
  base.pulses = 1'000'000;
  ExperimentConfig lossy = base;
  for (auto& s : lossy.sources) {
    s.transmission_a *= 0.1;
    s.transmission_b *= 0.1;
  }
  const auto a = run_rates(base);
  const auto b = run_rates(lossy);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(b.twofold_cps_expected[i] / a.twofold_cps_expected[i] == doctest::Approx(0.01).epsilon(0.1));
  }
  CHECK(b.fourfold_cps_expected < a.fourfold_cps_expected * 1e-2);
}

TEST_CASE("HOM raw visibility falls with mu") {
  ExperimentConfig c;
  c.delays_ps = {-8.0, 0.0, 8.0};
  c.background_passes = false;
  c.pulses = 1'000'000;
  c.sweep.scenario = "hom";
  c.sweep.values = {0.025, 0.05, 0.1, 0.2};
  const auto pts = run_sweep(c);
  REQUIRE(pts.size() == 4);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto a = pts[i].result.curves[0].v_raw_expected;
    const auto b = pts[i + 1].result.curves[0].v_raw_expected;
    CAPTURE(i);
    CHECK(a.value >= b.value - 3.0 * std::hypot(a.error, b.error));
  }
  CHECK(pts.front().mu[0] == 0.025);
}

TEST_CASE("faster pulsing at fixed pair rate raises visibility") {
  ExperimentConfig c;
  c.delays_ps = {-8.0, 0.0, 8.0};
  c.background_passes = false;
  c.pulses = 1'000'000;
  for (auto& s : c.sources) s.mu = 0.2;
  c.sweep.scenario = "hom";
  c.sweep.parameter = "rep_rate";
  c.sweep.values = {76e6, 304e6};
  const auto pts = run_sweep(c);
  CHECK(pts[1].mu[0] == doctest::Approx(0.05));
  const auto a = pts[0].result.curves[0].v_raw_expected;
  const auto b = pts[1].result.curves[0].v_raw_expected;
  CHECK(b.value - a.value > 3.0 * std::hypot(a.error, b.error));
}

TEST_CASE("quick oracle comparison") {
  ExperimentConfig c;
  c.pulses = 200000;
  c.validate.mu = {0.01};
  c.validate.scenarios = {"hom"};
  const auto rep = validate(c);
  CHECK(rep.nmax == 2);
  CHECK_FALSE(rep.rows.empty());
  for (const auto& row : rep.rows) {
    CAPTURE(row.observable);
    CHECK(row.exact >= 0.0);
    CHECK(row.exact <= 1.0);
  }
  CHECK(rep.passed());
}

TEST_CASE("swap results are reproducible and worker-independent") {
  ExperimentConfig c;
  c.pulses = 40000;
  c.swap.theta2 = {0.0};
  c.swap.theta3 = {0.0, 90.0};
  c.workers = 1;
  const auto a = run_swapping(c);
  c.workers = 3;
  const auto b = run_swapping(c);
  REQUIRE(a.curves.size() == b.curves.size());
  for (std::size_t i = 0; i < a.curves[0].points.size(); ++i) {
    const auto& x = a.curves[0].points[i].tally;
    const auto& y = b.curves[0].points[i].tally;
    CHECK(x.raw == y.raw);
    CHECK(x.background1 == y.background1);
    CHECK(x.background2 == y.background2);
    CHECK(x.expected_raw.value == doctest::Approx(y.expected_raw.value).epsilon(1e-12));
  }
  c.seed = 2;
  const auto d = run_swapping(c);
  CHECK(d.curves[0].points[0].tally.expected_raw.value != a.curves[0].points[0].tally.expected_raw.value);
}

TEST_CASE("cps conversion") {
  CHECK(to_cps(100.0, 76'000'000, 76e6) == doctest::Approx(100.0));
  CHECK(to_cps(1.0, 1000, 76e6) == doctest::Approx(76000.0));
}
