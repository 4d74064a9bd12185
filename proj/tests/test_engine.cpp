#include <doctest.h>

#include <cmath>

#include "swapsim/engine.h"
#include "swapsim/enumeration.h"

using namespace swapsim;

namespace {

EngineSpec swap_spec(double mu, double dark = 2.63e-5, double t = 0.25) {
  SetupSettings st;
  st.polarizers = {std::nullopt, 0.0, 45.0, std::nullopt};
  st.arm_transmission = {t, t, t, t};
  EngineSpec spec;
  spec.circuit = build_setup(SetupKind::Swap, st);
  for (auto& s : spec.sources) {
    s.mu = mu;
    s.purity = 0.82;
  }
  DetectorParams d;
  d.dark_prob = dark;
  d.matched = true;
  spec.detectors.assign(4, d);
  spec.coincidences = {{0b1111, 0}, {0b0011, 0}, {0b1100, 0}, {0b0010, 0b0001}};
  return spec;
}

}  // namespace

TEST_CASE("canonical labels") {
  const PairSpec a[] = {{0, 3, 3, PairType::Bell, BellState::PsiMinus}, {1, 7, 9, PairType::Bell, BellState::PsiMinus}};
  const PairSpec b[] = {{0, 5, 5, PairType::Bell, BellState::PsiMinus}, {1, 2, 4, PairType::Bell, BellState::PsiMinus}};
  const PairSpec c[] = {{0, 5, 5, PairType::Bell, BellState::PsiMinus}, {1, 5, 4, PairType::Bell, BellState::PsiMinus}};
  const auto ca = canonicalize(a);
  CHECK(ca.key == canonicalize(b).key);
  CHECK(ca.key != canonicalize(c).key);
  CHECK(ca.label_count == 3);
  CHECK(ca.pairs[0].label_a == 0);
  CHECK(ca.pairs[1].label_a == 1);
  CHECK(ca.pairs[1].label_b == 2);
}

TEST_CASE("engine rejects bad specs") {
  auto spec = swap_spec(0.1);
  spec.detectors.pop_back();
  CHECK_THROWS_AS(Engine{spec}, ValidationError);

  spec = swap_spec(0.1);
  spec.retention = 1.5;
  CHECK_THROWS_AS(Engine{spec}, ValidationError);

  spec = swap_spec(0.0);
  spec.limits.require_both_sources = true;
  CHECK_THROWS_AS(Engine{spec}, ValidationError);

  spec = swap_spec(0.1);
  spec.coincidences = {{0, 0}};
  CHECK_THROWS_AS(Engine{spec}, ValidationError);
  spec.coincidences = {{0b10000, 0}};
  CHECK_THROWS_AS(Engine{spec}, ValidationError);

  spec = swap_spec(0.1);
  spec.sources[0].filter = FilterSpec{};
  CHECK_THROWS_AS(Engine{spec}, ValidationError);
}

TEST_CASE("sampled click masks follow the exact distribution") {
  auto spec = swap_spec(0.1, 0.01, 0.6);
  const Engine engine(spec);
  TrajectoryCache cache(engine);
  const PairSpec pairs[] = {{0, 0, 0, PairType::Bell, BellState::PsiMinus},
                            {1, 0, 0, PairType::Bell, BellState::PsiMinus},
                            {1, 1, 1, PairType::Bell, BellState::PsiMinus}};
  auto& entry = cache.entry(canonicalize(pairs));
  const auto exact = cache.exact_masks(entry);
  double total = 0.0;
  for (double p : exact) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

  const int n = 200000;
  std::vector<int> hist(exact.size(), 0);
  Rng rng(31);
  for (int i = 0; i < n; ++i) ++hist[cache.sample(entry, rng).mask];
  for (std::size_t m = 0; m < exact.size(); ++m) {
    const double p = exact[m];
    CHECK(std::abs(hist[m] - n * p) <= 3.0 * std::sqrt(n * p * (1 - p)) + 1e-9);
  }

  const auto& sub = cache.subset_probs(entry);
  REQUIRE(sub.size() == spec.coincidences.size());
  CHECK(sub[1] == doctest::Approx(subset_probability(exact, 0b0011)).epsilon(1e-12));
}

TEST_CASE("kernel and loss-branch masks agree") {
  const PairSpec bell = {0, 0, 0, PairType::Bell, BellState::PsiMinus};
  const std::vector<std::vector<PairSpec>> cases{
      {bell},
      {bell, {1, 0, 0, PairType::Bell, BellState::PsiMinus}},
      {bell, {1, 1, 2, PairType::Bell, BellState::PsiMinus}},
      {bell, bell, {1, 0, 1, PairType::Bell, BellState::PsiMinus}},
      {{0, 0, 0, PairType::Bell, BellState::PhiPlus}, {1, 0, 0, PairType::Bell, BellState::PsiPlus}},
      {{0, 0, 0, PairType::HH, BellState::PsiMinus}, {1, 1, 1, PairType::VV, BellState::PsiMinus}},
  };
  for (double theta : {0.0, 22.5, 45.0}) {
    auto spec = swap_spec(0.1, 0.01, 0.6);
    SetupSettings st;
    st.polarizers = {std::nullopt, theta, 45.0, std::nullopt};
    st.arm_transmission = {0.6, 0.9, 0.3, 0.6};
    spec.circuit = build_setup(SetupKind::Swap, st);
    spec.detectors[1].matched = false;
    spec.detectors[1].axis_deg = 30.0;
    const Engine engine(spec);
    TrajectoryCache cache(engine);
    for (const auto& pairs : cases) {
      auto& entry = cache.entry(canonicalize(pairs));
      const auto fast = cache.exact_masks(entry);
      const auto slow = cache.branch_masks(entry);
      REQUIRE(fast.size() == slow.size());
      CAPTURE(theta);
      for (std::size_t m = 0; m < fast.size(); ++m) CHECK(fast[m] == doctest::Approx(slow[m]).epsilon(1e-9).scale(1e-12));
    }
  }
}

TEST_CASE("serial and parallel kernels agree") {
  const Engine engine(swap_spec(0.1, 2e-3));
  const std::uint64_t pulses = 60000;
  const auto serial = run_serial(engine, pulses, 77);
  CHECK(serial.counts[1] > 0);
  for (int workers : {1, 2, 3}) {
    for (std::uint64_t chunk : {std::uint64_t{1} << 12, std::uint64_t{1} << 16}) {
      CAPTURE(workers);
      CAPTURE(chunk);
      const auto par = run_parallel(engine, pulses, 77, workers, chunk);
      CHECK(par.counts == serial.counts);
      CHECK(par.pulses == serial.pulses);
      CHECK(par.resampled == serial.resampled);
      for (std::size_t k = 0; k < serial.expected.size(); ++k) {
        CHECK(par.expected[k] == doctest::Approx(serial.expected[k]).epsilon(1e-9));
        CHECK(par.expected_sq[k] == doctest::Approx(serial.expected_sq[k]).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("runs are deterministic in the key") {
  const Engine engine(swap_spec(0.1, 2e-3));
  const auto a = run_parallel(engine, 30000, 5, 2);
  const auto b = run_parallel(engine, 30000, 5, 2);
  CHECK(a == b);
  const auto c = run_parallel(engine, 30000, 6, 2);
  CHECK(a.counts != c.counts);
}

TEST_CASE("expected estimator tracks sampled counts") {
  const Engine engine(swap_spec(0.2, 1e-3, 0.5));
  const auto r = run_serial(engine, 200000, 9);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto e = r.expected_estimate(k);
    const double c = static_cast<double>(r.counts[k]);
    // Dead time makes sampled counts slightly lower; both share the same pulses.
    CHECK(std::abs(c - e.value) < 4.0 * std::sqrt(c + 1.0));
  }
}

TEST_CASE("single-pair emission leaves blocked arms dark") {
  auto spec = swap_spec(0.1, 0.0, 1.0);
  spec.limits.max_pairs_per_source = 1;
  spec.limits.require_both_sources = true;
  for (std::size_t arm : {0U, 3U}) {
    auto blocked = spec;
    auto st = SetupSettings{};
    st.polarizers = {std::nullopt, 0.0, 45.0, std::nullopt};
    st.arm_transmission = {1.0, 1.0, 1.0, 1.0};
    st.arm_transmission[arm] = 0.0;
    blocked.circuit = build_setup(SetupKind::Swap, st);
    const Engine engine(blocked);
    const auto r = run_serial(engine, 20000, 3);
    CHECK(r.counts[0] == 0);
    CHECK(r.expected[0] == 0.0);
  }
}

TEST_CASE("vacuum without dark counts never clicks") {
  auto spec = swap_spec(0.0, 0.0);
  spec.limits.max_pairs_per_source = 2;
  const Engine engine(spec);
  const auto r = run_parallel(engine, 10000, 1, 2);
  for (auto c : r.counts) CHECK(c == 0);
  for (double e : r.expected) CHECK(e == 0.0);

  spec.coincidences.pop_back();
  const auto ex = enumerate_exact(Engine(spec));
  for (double p : ex.probs) CHECK(p == 0.0);
}

TEST_CASE("enumeration needs bounded pair numbers") {
  auto spec = swap_spec(0.1);
  spec.coincidences.pop_back();
  CHECK_THROWS_AS(enumerate_exact(Engine(spec)), ValidationError);
  spec.limits.max_pairs_per_source = 2;
  CHECK_THROWS_WITH_AS(enumerate_exact(Engine(spec), 10), doctest::Contains("nmax"), ValidationError);
}

TEST_CASE("enumeration matches the sampler on a small case") {
  auto spec = swap_spec(0.1, 1e-3, 0.6);
  spec.limits.max_pairs_per_source = 2;
  spec.limits.require_both_sources = true;
  spec.coincidences.pop_back();
  for (auto& d : spec.detectors) d.dead_time_pulses = 0;
  const Engine engine(spec);
  const auto ex = enumerate_exact(engine);
  const std::uint64_t n = 100000;
  const auto r = run_parallel(engine, n, 21, 1);
  for (std::size_t k = 0; k < ex.probs.size(); ++k) {
    const double p = ex.probs[k];
    const double z = (static_cast<double>(r.counts[k]) - n * p) / std::sqrt(n * p * (1 - p));
    CAPTURE(k);
    CHECK(std::abs(z) < 3.0);
    CHECK(r.expected[k] / n == doctest::Approx(p).epsilon(0.05));
  }
}
