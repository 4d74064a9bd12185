#include "swapsim/experiments.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "swapsim/enumeration.h"

namespace swapsim {

std::string to_string(DetectorModel m) {
  switch (m) {
    case DetectorModel::Auto:
      return "auto";
    case DetectorModel::Matched:
      return "matched";
    case DetectorModel::Polarization:
      return "polarization";
  }
  return "?";
}

SourceParams default_source() {
  SourceParams p;
  p.transmission_a = kDefaultArmTransmission;
  p.transmission_b = kDefaultArmTransmission;
  return p;
}

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& constraint) {
  throw ConfigError(key + ": must be " + constraint);
}

bool unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void validate_config(const ExperimentConfig& c) {
  if (c.pulses == 0) bad("pulses", "> 0");
  if (c.workers < 0) bad("workers", "≥ 0");
  if (c.nmax < 0 || c.nmax > 4) bad("nmax", "in [0, 4]");
  if (!(c.rep_rate > 0.0)) bad("rep_rate", "> 0");
  if (!(c.fwhm_nm > 0.0)) bad("spectrum.fwhm_nm", "> 0");
  if (!(c.center_nm > 0.0)) bad("spectrum.center_nm", "> 0");
  if (!unit_interval(c.splitter_ratio)) bad("splitter_ratio", "in [0, 1]");
  if (c.limits.photon_cap < 2 || c.limits.photon_cap > 12) bad("limits.photon_cap", "in [2, 12]");
  if (c.limits.max_pairs_per_source < 0) bad("limits.max_pairs_per_source", "≥ 0");

  for (int i = 0; i < 2; ++i) {
    const auto& s = c.sources[static_cast<std::size_t>(i)];
    const std::string k = "sources[" + std::to_string(i) + "].";
    if (!(s.mu >= 0.0)) bad(k + "mu", "≥ 0");
    if (!(s.purity > 0.0 && s.purity <= 1.0)) bad(k + "purity", "in (0, 1]");
    if (!unit_interval(s.transmission_a)) bad(k + "transmission_a", "in [0, 1]");
    if (!unit_interval(s.transmission_b)) bad(k + "transmission_b", "in [0, 1]");
    if (!unit_interval(s.werner)) bad(k + "werner", "in [0, 1]");
    if (s.label_truncation < 0 || s.label_truncation > 40) bad(k + "label_truncation", "in [0, 40]");
    if (s.filter) {
      if (!unit_interval(s.filter->transmission)) bad(k + "filter.transmission", "in [0, 1]");
      if (!(s.filter->purity_after > 0.0 && s.filter->purity_after <= 1.0)) bad(k + "filter.purity_after", "in (0, 1]");
      if (s.filter->purity_after < s.purity) bad(k + "filter.purity_after", "≥ purity");
    }
    if (c.limits.require_both_sources && s.mu <= 0.0) bad(k + "mu", "> 0 when limits.require_both_sources is set");
  }

  const auto& d = c.detector;
  if (!unit_interval(d.eta_max)) bad("detector.eta_max", "in [0, 1]");
  if (!(d.eta_min >= 0.0 && d.eta_min <= d.eta_max)) bad("detector.eta_min", "in [0, eta_max]");
  if (!(d.dark_count_rate >= 0.0 && d.dark_count_rate < c.rep_rate))
    bad("detector.dark_count_rate", "≥ 0 and below rep_rate");
  if (d.dead_time_pulses < 0) bad("detector.dead_time_pulses", "≥ 0");

  if (c.delays_ps.empty()) bad("delays_ps", "non-empty");
  if (std::find(c.delays_ps.begin(), c.delays_ps.end(), 0.0) == c.delays_ps.end()) bad("delays_ps", "contain 0");
  for (double t : c.delays_ps)
    if (std::find(c.delays_ps.begin(), c.delays_ps.end(), -t) == c.delays_ps.end())
      bad("delays_ps", "symmetric about 0");
  if (!std::is_sorted(c.delays_ps.begin(), c.delays_ps.end())) bad("delays_ps", "sorted ascending");

  for (int s : c.source_test.tested_sources)
    if (s != 1 && s != 2) bad("source_test.tested_sources", "a list of 1 and/or 2");
  if (c.source_test.theta1.empty() || c.source_test.theta2.empty()) bad("source_test.theta1/theta2", "non-empty");
  if (c.teleport.settings.empty()) bad("teleport.settings", "non-empty");
  if (c.swap.theta2.empty() || c.swap.theta3.empty()) bad("swap.theta2/theta3", "non-empty");

  for (double m : c.validate.mu)
    if (!(m >= 0.0)) bad("validate.mu", "a list of values ≥ 0");
  for (const auto& s : c.validate.scenarios)
    if (s != "hom" && s != "teleport" && s != "swap") bad("validate.scenarios", "drawn from hom, teleport, swap");
  if (c.validate.config_cap == 0) bad("validate.config_cap", "> 0");

  if (c.sweep.scenario != "hom" && c.sweep.scenario != "swap") bad("sweep.scenario", "hom or swap");
  if (c.sweep.parameter != "mu" && c.sweep.parameter != "rep_rate") bad("sweep.parameter", "mu or rep_rate");
  if (c.sweep.values.empty()) bad("sweep.values", "non-empty");
  for (double v : c.sweep.values) {
    if (c.sweep.parameter == "mu" && !(v >= 0.0)) bad("sweep.values", "≥ 0 for mu");
    if (c.sweep.parameter == "rep_rate" && !(v > 0.0)) bad("sweep.values", "> 0 for rep_rate");
  }
}

DetectorParams detector_params(const ExperimentConfig& cfg, SetupKind kind, Port port) {
  DetectorParams p;
  p.eta_max = cfg.detector.eta_max;
  p.eta_min = cfg.detector.eta_min;
  p.axis_deg = cfg.detector.axis_deg;
  p.dark_prob = dark_prob_from_rate(cfg.detector.dark_count_rate, cfg.rep_rate);
  p.dead_time_pulses = cfg.detector.dead_time_pulses;
  switch (cfg.detector.model) {
    case DetectorModel::Matched:
      p.matched = true;
      break;
    case DetectorModel::Polarization:
      p.matched = false;
      break;
    case DetectorModel::Auto:
      p.matched = !(kind == SetupKind::HomTeleport && (port == Port::P5 || port == Port::P6));
      break;
  }
  return p;
}

Engine make_engine(const ExperimentConfig& cfg, SetupKind kind, SetupSettings settings,
                   std::vector<Coincidence> coincidences, std::optional<int> blocked_arm) {
  EngineSpec spec;
  for (std::size_t i = 0; i < 2; ++i) spec.sources[i] = apply_filter(cfg.sources[i]);
  settings.arm_transmission = {spec.sources[0].transmission_a, spec.sources[0].transmission_b,
                               spec.sources[1].transmission_a, spec.sources[1].transmission_b};
  if (blocked_arm) settings.arm_transmission.at(static_cast<std::size_t>(*blocked_arm)) = 0.0;
  settings.splitter_ratio = cfg.splitter_ratio;
  spec.circuit = build_setup(kind, settings);
  for (Port p : spec.circuit.detectors) spec.detectors.push_back(detector_params(cfg, kind, p));
  spec.coincidences = std::move(coincidences);
  spec.retention = label_retention(settings.delay_ps, coherence_sigma_ps(cfg.fwhm_nm, cfg.center_nm));
  spec.limits = cfg.limits;
  return Engine(std::move(spec));
}

double to_cps(double counts, std::uint64_t pulses, double rep_rate) {
  return pulses == 0 ? 0.0 : counts * rep_rate / static_cast<double>(pulses);
}

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

Estimate counts_estimate(std::uint64_t n) {
  return {static_cast<double>(n), std::sqrt(static_cast<double>(n))};
}

Estimate mean2(Estimate a, Estimate b) { return {(a.value + b.value) / 2.0, std::hypot(a.error, b.error) / 2.0}; }

}  // namespace

void CurveResult::finalize() {
  if (points.empty()) return;
  auto raw = [](const TallyResult& t) { return counts_estimate(t.raw); };
  auto net = [](const TallyResult& t) { return t.net_counts(); };
  auto eraw = [](const TallyResult& t) { return t.expected_raw; };
  auto enet = [](const TallyResult& t) { return t.expected_net(); };

  auto compute = [&](auto&& get) -> Estimate {
    if (dip) {
      const auto lo = std::min_element(points.begin(), points.end(), [](auto& a, auto& b) { return a.x < b.x; });
      const auto hi = std::max_element(points.begin(), points.end(), [](auto& a, auto& b) { return a.x < b.x; });
      const auto zero = std::find_if(points.begin(), points.end(), [](auto& p) { return p.x == 0.0; });
      if (zero == points.end()) throw ValidationError("dip curve needs a point at zero delay");
      return dip_visibility(mean2(get(lo->tally), get(hi->tally)), get(zero->tally));
    }
    Estimate mx = get(points.front().tally), mn = mx;
    for (const auto& p : points) {
      const auto e = get(p.tally);
      if (e.value > mx.value) mx = e;
      if (e.value < mn.value) mn = e;
    }
    return fringe_visibility(mx, mn);
  };

  v_raw = compute(raw);
  v_net = compute(net);
  v_raw_expected = compute(eraw);
  v_net_expected = compute(enet);
  fidelity_raw = fidelity_from_visibility(clamp01(v_raw_expected.value));
  fidelity_net = fidelity_from_visibility(clamp01(v_net_expected.value));
  entangled_raw = is_entangled(clamp01(v_raw_expected.value));
  entangled_net = is_entangled(clamp01(v_net_expected.value));
  physical = v_net.value >= -0.05 && v_net.value <= 1.01 && v_net_expected.value >= -0.05 &&
             v_net_expected.value <= 1.01;
}

namespace {

enum Scenario : std::uint64_t { kSourceTest = 1, kHom, kTeleport, kSwap, kRates, kValidate };

std::uint64_t point_key(std::uint64_t seed, Scenario s, std::size_t curve, std::size_t point) {
  return derive_key(derive_key(derive_key(seed, s), curve), point);
}

constexpr Coincidence kFourFold{0b1111, 0};

// Raw pass plus, when enabled, the block-ch1 and block-ch4 passes, all on one
// random stream.
TallyResult interference_point(const ExperimentConfig& cfg, SetupKind kind, const SetupSettings& s,
                               std::uint64_t key, std::uint64_t& resampled) {
  TallyResult t;
  t.pulses = cfg.pulses;
  t.seconds = static_cast<double>(cfg.pulses) / cfg.rep_rate;
  auto pass = [&](std::optional<int> blocked, std::uint64_t& count, Estimate& expected) {
    const Engine e = make_engine(cfg, kind, s, {kFourFold}, blocked);
    const auto r = run_parallel(e, cfg.pulses, key, cfg.workers);
    count = r.counts[0];
    expected = r.expected_estimate(0);
    resampled += r.resampled;
  };
  pass(std::nullopt, t.raw, t.expected_raw);
  if (cfg.background_passes) {
    pass(0, t.background1, t.expected_b1);
    pass(3, t.background2, t.expected_b2);
  }
  return t;
}

std::string fmt_angle(double a) {
  std::string s = std::to_string(a);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

ExperimentResult run_source_test(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ExperimentResult out{"source-test", cfg.rep_rate, {}, 0};
  // Pair coincidence, and the adjacent-slot accidental coincidence used as background.
  const std::vector<Coincidence> co{{0b11, 0}, {0b01, 0b10}};
  std::size_t ci = 0;
  for (int src : cfg.source_test.tested_sources) {
    for (double th1 : cfg.source_test.theta1) {
      CurveResult curve;
      curve.label = "source" + std::to_string(src) + " theta1=" + fmt_angle(th1);
      curve.abscissa = "theta2_deg";
      std::size_t pi = 0;
      for (double th2 : cfg.source_test.theta2) {
        SetupSettings s;
        s.tested_source = src;
        const std::size_t a = src == 1 ? 0 : 2;
        s.polarizers[a] = th1;
        s.polarizers[a + 1] = th2;
        const Engine e = make_engine(cfg, SetupKind::SourceTest, s, co);
        const auto r = run_parallel(e, cfg.pulses, point_key(cfg.seed, kSourceTest, ci, pi++), cfg.workers);
        out.resampled += r.resampled;
        TallyResult t;
        t.setting = curve.label + " theta2=" + fmt_angle(th2);
        t.pulses = cfg.pulses;
        t.seconds = static_cast<double>(cfg.pulses) / cfg.rep_rate;
        t.raw = r.counts[0];
        t.expected_raw = r.expected_estimate(0);
        if (cfg.background_passes) {
          t.background1 = r.counts[1];
          t.expected_b1 = r.expected_estimate(1);
        }
        curve.points.push_back({th2, t});
      }
      curve.finalize();
      out.curves.push_back(std::move(curve));
      ++ci;
    }
  }
  return out;
}

namespace {

CurveResult delay_curve(const ExperimentConfig& cfg, Scenario sc, std::size_t ci, const std::string& label,
                        const std::array<std::optional<double>, 4>& pol, std::uint64_t& resampled) {
  CurveResult curve;
  curve.label = label;
  curve.abscissa = "delay_ps";
  curve.dip = true;
  std::size_t pi = 0;
  for (double tau : cfg.delays_ps) {
    SetupSettings s;
    s.polarizers = pol;
    s.delay_ps = tau;
    auto t = interference_point(cfg, SetupKind::HomTeleport, s, point_key(cfg.seed, sc, ci, pi++), resampled);
    t.setting = label + " delay=" + fmt_angle(tau);
    curve.points.push_back({tau, t});
  }
  curve.finalize();
  return curve;
}

}  // namespace

ExperimentResult run_hom(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ExperimentResult out{"hom", cfg.rep_rate, {}, 0};
  std::array<std::optional<double>, 4> pol;
  for (std::size_t i = 0; i < 4; ++i) pol[i] = cfg.hom.polarizers[i];
  std::string label = "polarizers=";
  for (std::size_t i = 0; i < 4; ++i) label += (i ? "/" : "") + fmt_angle(cfg.hom.polarizers[i]);
  out.curves.push_back(delay_curve(cfg, kHom, 0, label, pol, out.resampled));
  return out;
}

ExperimentResult run_teleportation(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ExperimentResult out{"teleport", cfg.rep_rate, {}, 0};
  std::size_t ci = 0;
  for (const auto& [th2, th3] : cfg.teleport.settings) {
    std::array<std::optional<double>, 4> pol;
    pol[1] = th2;
    pol[2] = th3;
    const std::string label = "theta2=" + fmt_angle(th2) + " theta3=" + fmt_angle(th3);
    out.curves.push_back(delay_curve(cfg, kTeleport, ci++, label, pol, out.resampled));
  }
  return out;
}

ExperimentResult run_swapping(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ExperimentResult out{"swap", cfg.rep_rate, {}, 0};
  std::size_t ci = 0;
  for (double th2 : cfg.swap.theta2) {
    CurveResult curve;
    curve.label = "theta2=" + fmt_angle(th2);
    curve.abscissa = "theta3_deg";
    std::size_t pi = 0;
    for (double th3 : cfg.swap.theta3) {
      SetupSettings s;
      s.polarizers[1] = th2;
      s.polarizers[2] = th3;
      s.delay_ps = cfg.swap.delay_ps;
      auto t = interference_point(cfg, SetupKind::Swap, s, point_key(cfg.seed, kSwap, ci, pi++), out.resampled);
      t.setting = curve.label + " theta3=" + fmt_angle(th3);
      curve.points.push_back({th3, t});
    }
    curve.finalize();
    out.curves.push_back(std::move(curve));
    ++ci;
  }
  return out;
}

RateReport run_rates(const ExperimentConfig& cfg) {
  validate_config(cfg);
  RateReport r;
  r.pulses = cfg.pulses;
  r.seconds = static_cast<double>(cfg.pulses) / cfg.rep_rate;
  const auto cps = [&](double n) { return to_cps(n, cfg.pulses, cfg.rep_rate); };

  SetupSettings direct;
  direct.tested_source = 0;
  const std::vector<Coincidence> co{{0b0001, 0}, {0b0010, 0}, {0b0100, 0}, {0b1000, 0}, {0b0011, 0}, {0b1100, 0}};
  const auto t = run_parallel(make_engine(cfg, SetupKind::SourceTest, direct, co), cfg.pulses,
                              point_key(cfg.seed, kRates, 0, 0), cfg.workers);
  for (std::size_t i = 0; i < 4; ++i) r.singles_cps[i] = cps(static_cast<double>(t.counts[i]));
  for (std::size_t i = 0; i < 2; ++i) {
    r.twofold_cps[i] = cps(static_cast<double>(t.counts[4 + i]));
    r.twofold_cps_expected[i] = cps(t.expected_estimate(4 + i).value);
  }

  r.fourfold_setup = cfg.rates.fourfold_setup;
  SetupSettings s;
  if (r.fourfold_setup == SetupKind::SourceTest) s.tested_source = 0;
  const auto f = run_parallel(make_engine(cfg, r.fourfold_setup, s, {kFourFold}), cfg.pulses,
                              point_key(cfg.seed, kRates, 1, 0), cfg.workers);
  r.fourfold_cps = cps(static_cast<double>(f.counts[0]));
  const auto e = f.expected_estimate(0);
  r.fourfold_cps_expected = cps(e.value);
  r.fourfold_cps_error = cps(e.error);
  return r;
}

double ValidationReport::max_abs_z() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, std::abs(r.z));
  return m;
}

namespace {

struct ValidationSetting {
  std::string scenario;
  std::string label;
  SetupKind kind;
  SetupSettings settings;
};

std::vector<ValidationSetting> validation_settings(const ExperimentConfig& cfg, const std::string& scenario) {
  std::vector<ValidationSetting> out;
  const double far = std::max(std::abs(cfg.delays_ps.front()), std::abs(cfg.delays_ps.back()));
  if (scenario == "hom") {
    for (double tau : {0.0, far}) {
      SetupSettings s;
      for (std::size_t i = 0; i < 4; ++i) s.polarizers[i] = cfg.hom.polarizers[i];
      s.delay_ps = tau;
      out.push_back({scenario, "delay=" + fmt_angle(tau), SetupKind::HomTeleport, s});
    }
  } else if (scenario == "teleport") {
    for (std::size_t k = 0; k < std::min<std::size_t>(2, cfg.teleport.settings.size()); ++k) {
      const auto [th2, th3] = cfg.teleport.settings[k];
      for (double tau : {0.0, far}) {
        if (k > 0 && tau != 0.0) continue;
        SetupSettings s;
        s.polarizers[1] = th2;
        s.polarizers[2] = th3;
        s.delay_ps = tau;
        out.push_back({scenario, "theta2=" + fmt_angle(th2) + " theta3=" + fmt_angle(th3) + " delay=" + fmt_angle(tau),
                       SetupKind::HomTeleport, s});
      }
    }
  } else {
    const double th2 = cfg.swap.theta2.front();
    for (double th3 : {th2, th2 + 90.0}) {
      SetupSettings s;
      s.polarizers[1] = th2;
      s.polarizers[2] = th3;
      s.delay_ps = cfg.swap.delay_ps;
      out.push_back({scenario, "theta2=" + fmt_angle(th2) + " theta3=" + fmt_angle(th3), SetupKind::Swap, s});
    }
  }
  return out;
}

double z_score(std::uint64_t count, std::uint64_t n, double p) {
  const double mean = static_cast<double>(n) * p;
  const double var = mean * (1.0 - p);
  if (var <= 0.0) return count == static_cast<std::uint64_t>(std::llround(mean)) ? 0.0 : 1e9;
  return (static_cast<double>(count) - mean) / std::sqrt(var);
}

}  // namespace

ValidationReport validate(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ValidationReport rep;
  rep.nmax = cfg.nmax > 0 ? cfg.nmax : 2;
  const std::vector<Coincidence> co{{0b1111, 0}, {0b0011, 0}, {0b1100, 0}};
  const char* names[] = {"fourfold", "bsm_twofold", "herald_twofold"};
  std::size_t ci = 0;
  for (double mu : cfg.validate.mu) {
    ExperimentConfig c = cfg;
    for (auto& s : c.sources) s.mu = mu;
    c.detector.dead_time_pulses = 0;
    c.limits.max_pairs_per_source = rep.nmax;
    c.limits.require_both_sources = cfg.validate.require_both_sources && mu > 0.0;
    for (const auto& scenario : cfg.validate.scenarios) {
      for (const auto& vs : validation_settings(c, scenario)) {
        const Engine e = make_engine(c, vs.kind, vs.settings, co);
        const auto exact = enumerate_exact(e, cfg.validate.config_cap);
        const auto mc = run_parallel(e, c.pulses, point_key(cfg.seed, kValidate, ci++, 0), c.workers);
        for (std::size_t k = 0; k < co.size(); ++k) {
          ValidationRow row;
          row.scenario = scenario;
          row.observable = vs.label + " " + names[k];
          row.mu = mu;
          row.exact = exact.probs[k];
          row.trials = mc.pulses;
          row.count = mc.counts[k];
          row.z = z_score(row.count, row.trials, row.exact);
          rep.rows.push_back(row);
        }
      }
    }
  }
  return rep;
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg) {
  validate_config(cfg);
  std::vector<SweepPoint> out;
  for (double v : cfg.sweep.values) {
    ExperimentConfig c = cfg;
    if (cfg.sweep.parameter == "mu") {
      for (auto& s : c.sources) s.mu = v;
    } else {
      c.rep_rate = v;
      for (auto& s : c.sources) s.mu *= cfg.rep_rate / v;
    }
    SweepPoint p;
    p.value = v;
    p.mu = {c.sources[0].mu, c.sources[1].mu};
    p.rep_rate = c.rep_rate;
    p.result = cfg.sweep.scenario == "hom" ? run_hom(c) : run_swapping(c);
    out.push_back(std::move(p));
  }
  return out;
}

namespace ideal {

namespace {

std::vector<Port> all_ports(const Circuit& c) { return c.ports(); }

SparseState singlet_pairs(const RegistryPtr& reg, std::span<const int> sources, BellState bell) {
  std::vector<PairSpec> pairs;
  for (int s : sources) {
    PairSpec p;
    p.source = s;
    p.bell = bell;
    pairs.push_back(p);
  }
  return emit_state(pairs, reg);
}

// Probability that every listed port holds at least one photon.
double all_occupied(const SparseState& s, std::span<const Port> ports) {
  const auto& reg = s.registry();
  double total = 0.0;
  for (const auto& [pat, p] : measurement_distribution(s)) {
    bool ok = true;
    for (Port port : ports) {
      int n = 0;
      for (int l = 0; l < reg.label_count(); ++l)
        for (Pol pol : {Pol::H, Pol::V}) n += pat[reg.index({port, pol, l})];
      ok = ok && n > 0;
    }
    if (ok) total += p;
  }
  return total;
}

int port_photons(const OccupationPattern& pat, const ModeRegistry& reg, Port port) {
  int n = 0;
  for (int l = 0; l < reg.label_count(); ++l)
    for (Pol pol : {Pol::H, Pol::V}) n += pat[reg.index({port, pol, l})];
  return n;
}

}  // namespace

double source_test_coincidence(double theta1, double theta2, BellState bell) {
  SetupSettings s;
  s.polarizers[0] = theta1;
  s.polarizers[1] = theta2;
  const auto c = build_setup(SetupKind::SourceTest, s);
  const auto ports = all_ports(c);
  auto reg = std::make_shared<const ModeRegistry>(ports, 1);
  const int src[] = {0};
  const auto out = apply_unitaries(singlet_pairs(reg, src, bell), c);
  return all_occupied(out, c.detectors);
}

double bsm_coincidence(BellState input) {
  const auto c = build_setup(SetupKind::HomTeleport, SetupSettings{});
  const auto ports = all_ports(c);
  auto reg = std::make_shared<const ModeRegistry>(ports, 1);
  const double h = 1.0 / std::sqrt(2.0);
  struct Term {
    Pol a, b;
    double amp;
  };
  std::vector<Term> terms;
  switch (input) {
    case BellState::PsiMinus:
      terms = {{Pol::H, Pol::V, h}, {Pol::V, Pol::H, -h}};
      break;
    case BellState::PsiPlus:
      terms = {{Pol::H, Pol::V, h}, {Pol::V, Pol::H, h}};
      break;
    case BellState::PhiMinus:
      terms = {{Pol::H, Pol::H, h}, {Pol::V, Pol::V, -h}};
      break;
    case BellState::PhiPlus:
      terms = {{Pol::H, Pol::H, h}, {Pol::V, Pol::V, h}};
      break;
  }
  auto state = SparseState::zero(reg);
  for (const auto& t : terms) {
    SparseState b(reg);
    b.create({Port::Ch1, t.a, 0});
    b.create({Port::Ch4, t.b, 0});
    for (const auto& [p, a] : b.terms()) state.add(p, a * t.amp);
  }
  const auto out = apply_unitaries(state, c);
  const Port outs[] = {Port::P5, Port::P6};
  return all_occupied(out, outs);
}

double teleport_fidelity(std::complex<double> alpha, std::complex<double> beta) {
  const double n = std::sqrt(std::norm(alpha) + std::norm(beta));
  if (n == 0.0) throw ValidationError("input qubit must be non-zero");
  alpha /= n;
  beta /= n;
  const auto c = build_setup(SetupKind::HomTeleport, SetupSettings{});
  const auto ports = all_ports(c);
  auto reg = std::make_shared<const ModeRegistry>(ports, 1);

  auto qubit = SparseState::zero(reg);
  SparseState h(reg), v(reg);
  h.create({Port::Ch1, Pol::H, 0});
  v.create({Port::Ch1, Pol::V, 0});
  for (const auto& [p, a] : h.terms()) qubit.add(p, a * alpha);
  for (const auto& [p, a] : v.terms()) qubit.add(p, a * beta);
  const int src[] = {1};
  const auto joint = tensor(qubit, singlet_pairs(reg, src, BellState::PsiMinus));
  const auto out = apply_unitaries(joint, c);

  const Port q[] = {Port::Ch3};
  const auto& r = *reg;
  const auto cond = conditional_qubits(out, q, [&](const OccupationPattern& p) {
    return port_photons(p, r, Port::P5) == 1 && port_photons(p, r, Port::P6) == 1;
  });
  Eigen::Vector2cd psi(alpha, beta);
  return (psi.adjoint() * cond.rho * psi)(0, 0).real();
}

ConditionalState swap_conditional() {
  const auto c = build_setup(SetupKind::Swap, SetupSettings{});
  const auto ports = all_ports(c);
  auto reg = std::make_shared<const ModeRegistry>(ports, 1);
  const int src[] = {0, 1};
  const auto out = apply_unitaries(singlet_pairs(reg, src, BellState::PsiMinus), c);
  const Port q[] = {Port::Ch2, Port::Ch3};
  const auto& r = *reg;
  return conditional_qubits(out, q, [&](const OccupationPattern& p) {
    return port_photons(p, r, Port::P7) == 1 && port_photons(p, r, Port::P8) == 1;
  });
}

double swap_fringe(double theta2, double theta3) {
  SetupSettings s;
  s.polarizers[1] = theta2;
  s.polarizers[2] = theta3;
  const auto c = build_setup(SetupKind::Swap, s);
  const auto ports = all_ports(c);
  auto reg = std::make_shared<const ModeRegistry>(ports, 1);
  const int src[] = {0, 1};
  const auto out = apply_unitaries(singlet_pairs(reg, src, BellState::PsiMinus), c);
  const Port herald[] = {Port::P7, Port::P8};
  const double p_bsm = all_occupied(out, herald);
  if (p_bsm <= 0.0) return 0.0;
  return all_occupied(out, c.detectors) / p_bsm;
}

}  // namespace ideal

}  // namespace swapsim
