#include "swapsim/config.h"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace swapsim {

std::string setup_name(SetupKind k) {
  switch (k) {
    case SetupKind::SourceTest:
      return "source-test";
    case SetupKind::HomTeleport:
      return "hom";
    case SetupKind::Swap:
      return "swap";
  }
  return "?";
}

SetupKind parse_setup(const std::string& name) {
  for (auto k : {SetupKind::SourceTest, SetupKind::HomTeleport, SetupKind::Swap})
    if (setup_name(k) == name) return k;
  throw ConfigError("unknown setup '" + name + "': must be source-test, hom or swap");
}

namespace {

using Keys = std::set<std::string>;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const YAML::Node& n, const std::string& path, const Keys& allowed) {
  if (!n.IsMap()) throw ConfigError((path.empty() ? std::string("<root>") : path) + ": expected a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(join(path, key) + ": unknown key");
  }
}

template <class T>
T scalar(const YAML::Node& n, const std::string& path, const char* what) {
  if (!n.IsScalar()) throw ConfigError(path + ": expected " + what);
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path + ": expected " + what + ", got '" + n.Scalar() + "'");
  }
}

double as_double(const YAML::Node& n, const std::string& p) { return scalar<double>(n, p, "a number"); }
int as_int(const YAML::Node& n, const std::string& p) { return scalar<int>(n, p, "an integer"); }
bool as_bool(const YAML::Node& n, const std::string& p) { return scalar<bool>(n, p, "true or false"); }
std::string as_string(const YAML::Node& n, const std::string& p) { return scalar<std::string>(n, p, "a string"); }

std::uint64_t as_u64(const YAML::Node& n, const std::string& p) {
  if (n.IsScalar() && !n.Scalar().empty() && n.Scalar()[0] == '-') throw ConfigError(p + ": must be ≥ 0");
  return scalar<std::uint64_t>(n, p, "a non-negative integer");
}

template <class T, class F>
std::vector<T> as_list(const YAML::Node& n, const std::string& p, F&& item) {
  if (!n.IsSequence()) throw ConfigError(p + ": expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(item(n[i], p + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> as_doubles(const YAML::Node& n, const std::string& p) { return as_list<double>(n, p, as_double); }

template <class T, class F>
void opt(const YAML::Node& n, const std::string& path, const char* key, T& out, F&& conv) {
  if (const auto v = n[key]) out = conv(v, join(path, key));
}

BellState parse_bell(const YAML::Node& n, const std::string& p) {
  const auto s = as_string(n, p);
  for (auto b : {BellState::PsiMinus, BellState::PsiPlus, BellState::PhiMinus, BellState::PhiPlus})
    if (to_string(b) == s) return b;
  throw ConfigError(p + ": must be one of psi-, psi+, phi-, phi+");
}

DetectorModel parse_model(const YAML::Node& n, const std::string& p) {
  const auto s = as_string(n, p);
  for (auto m : {DetectorModel::Auto, DetectorModel::Matched, DetectorModel::Polarization})
    if (to_string(m) == s) return m;
  throw ConfigError(p + ": must be one of auto, matched, polarization");
}

void parse_source(const YAML::Node& n, const std::string& p, SourceParams& s) {
  check_keys(n, p, {"mu", "purity", "bell", "transmission_a", "transmission_b", "label_truncation", "werner", "filter"});
  opt(n, p, "mu", s.mu, as_double);
  opt(n, p, "purity", s.purity, as_double);
  opt(n, p, "bell", s.bell, parse_bell);
  opt(n, p, "transmission_a", s.transmission_a, as_double);
  opt(n, p, "transmission_b", s.transmission_b, as_double);
  opt(n, p, "label_truncation", s.label_truncation, as_int);
  opt(n, p, "werner", s.werner, as_double);
  if (const auto f = n["filter"]) {
    const auto fp = join(p, "filter");
    if (f.IsNull()) {
      s.filter.reset();
      return;
    }
    check_keys(f, fp, {"transmission", "purity_after", "arm_a", "arm_b"});
    FilterSpec spec = s.filter.value_or(FilterSpec{});
    opt(f, fp, "transmission", spec.transmission, as_double);
    opt(f, fp, "purity_after", spec.purity_after, as_double);
    opt(f, fp, "arm_a", spec.on_arm_a, as_bool);
    opt(f, fp, "arm_b", spec.on_arm_b, as_bool);
    s.filter = spec;
  }
}

void apply(const YAML::Node& root, ExperimentConfig& c) {
  check_keys(root, "",
             {"preset", "seed", "pulses", "workers", "nmax", "rep_rate", "splitter_ratio", "background_passes",
              "spectrum", "limits", "sources", "detector", "delays_ps", "source_test", "hom", "teleport", "swap",
              "rates", "validate", "sweep"});
  opt(root, "", "seed", c.seed, as_u64);
  opt(root, "", "pulses", c.pulses, as_u64);
  opt(root, "", "workers", c.workers, as_int);
  opt(root, "", "nmax", c.nmax, as_int);
  opt(root, "", "rep_rate", c.rep_rate, as_double);
  opt(root, "", "splitter_ratio", c.splitter_ratio, as_double);
  opt(root, "", "background_passes", c.background_passes, as_bool);
  opt(root, "", "delays_ps", c.delays_ps, as_doubles);

  if (const auto n = root["spectrum"]) {
    check_keys(n, "spectrum", {"fwhm_nm", "center_nm"});
    opt(n, "spectrum", "fwhm_nm", c.fwhm_nm, as_double);
    opt(n, "spectrum", "center_nm", c.center_nm, as_double);
  }
  if (const auto n = root["limits"]) {
    check_keys(n, "limits", {"photon_cap", "max_pairs_per_source", "require_both_sources"});
    opt(n, "limits", "photon_cap", c.limits.photon_cap, as_int);
    opt(n, "limits", "max_pairs_per_source", c.limits.max_pairs_per_source, as_int);
    opt(n, "limits", "require_both_sources", c.limits.require_both_sources, as_bool);
  }
  if (const auto n = root["sources"]) {
    if (n.IsMap()) {
      parse_source(n, "sources", c.sources[0]);
      parse_source(n, "sources", c.sources[1]);
    } else if (n.IsSequence() && n.size() == 2) {
      parse_source(n[0], "sources[0]", c.sources[0]);
      parse_source(n[1], "sources[1]", c.sources[1]);
    } else {
      throw ConfigError("sources: expected a mapping (both sources) or a list of two mappings");
    }
  }
  if (const auto n = root["detector"]) {
    const std::string p = "detector";
    check_keys(n, p, {"eta_max", "eta_min", "axis_deg", "dark_count_rate", "dead_time_pulses", "model"});
    opt(n, p, "eta_max", c.detector.eta_max, as_double);
    opt(n, p, "eta_min", c.detector.eta_min, as_double);
    opt(n, p, "axis_deg", c.detector.axis_deg, as_double);
    opt(n, p, "dark_count_rate", c.detector.dark_count_rate, as_double);
    opt(n, p, "dead_time_pulses", c.detector.dead_time_pulses, as_int);
    opt(n, p, "model", c.detector.model, parse_model);
  }
  if (const auto n = root["source_test"]) {
    const std::string p = "source_test";
    check_keys(n, p, {"tested_sources", "theta1", "theta2"});
    if (const auto v = n["tested_sources"]) c.source_test.tested_sources = as_list<int>(v, join(p, "tested_sources"), as_int);
    opt(n, p, "theta1", c.source_test.theta1, as_doubles);
    opt(n, p, "theta2", c.source_test.theta2, as_doubles);
  }
  if (const auto n = root["hom"]) {
    check_keys(n, "hom", {"polarizers"});
    if (const auto v = n["polarizers"]) {
      const auto a = as_doubles(v, "hom.polarizers");
      if (a.size() != 4) throw ConfigError("hom.polarizers: must list exactly 4 angles");
      std::copy(a.begin(), a.end(), c.hom.polarizers.begin());
    }
  }
  if (const auto n = root["teleport"]) {
    check_keys(n, "teleport", {"settings"});
    if (const auto v = n["settings"]) {
      c.teleport.settings = as_list<std::pair<double, double>>(v, "teleport.settings", [](const YAML::Node& x, const std::string& p) {
        const auto a = as_doubles(x, p);
        if (a.size() != 2) throw ConfigError(p + ": must be a [theta2, theta3] pair");
        return std::make_pair(a[0], a[1]);
      });
    }
  }
  if (const auto n = root["swap"]) {
    check_keys(n, "swap", {"theta2", "theta3", "delay_ps"});
    opt(n, "swap", "theta2", c.swap.theta2, as_doubles);
    opt(n, "swap", "theta3", c.swap.theta3, as_doubles);
    opt(n, "swap", "delay_ps", c.swap.delay_ps, as_double);
  }
  if (const auto n = root["rates"]) {
    check_keys(n, "rates", {"fourfold_setup"});
    if (const auto v = n["fourfold_setup"]) {
      try {
        c.rates.fourfold_setup = parse_setup(as_string(v, "rates.fourfold_setup"));
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("rates.fourfold_setup: ") + e.what());
      }
    }
  }
  if (const auto n = root["validate"]) {
    const std::string p = "validate";
    check_keys(n, p, {"mu", "scenarios", "require_both_sources", "config_cap"});
    opt(n, p, "mu", c.validate.mu, as_doubles);
    if (const auto v = n["scenarios"]) c.validate.scenarios = as_list<std::string>(v, join(p, "scenarios"), as_string);
    opt(n, p, "require_both_sources", c.validate.require_both_sources, as_bool);
    if (const auto v = n["config_cap"]) c.validate.config_cap = as_u64(v, join(p, "config_cap"));
  }
  if (const auto n = root["sweep"]) {
    check_keys(n, "sweep", {"scenario", "parameter", "values"});
    opt(n, "sweep", "scenario", c.sweep.scenario, as_string);
    opt(n, "sweep", "parameter", c.sweep.parameter, as_string);
    opt(n, "sweep", "values", c.sweep.values, as_doubles);
  }
}

// Shortest decimal that reads back to the same double.
std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void emit_doubles(YAML::Emitter& e, const std::vector<double>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (double x : v) e << num(x);
  e << YAML::EndSeq;
}

void emit_source(YAML::Emitter& e, const SourceParams& s) {
  e << YAML::BeginMap;
  e << YAML::Key << "mu" << YAML::Value << num(s.mu);
  e << YAML::Key << "purity" << YAML::Value << num(s.purity);
  e << YAML::Key << "bell" << YAML::Value << to_string(s.bell);
  e << YAML::Key << "transmission_a" << YAML::Value << num(s.transmission_a);
  e << YAML::Key << "transmission_b" << YAML::Value << num(s.transmission_b);
  e << YAML::Key << "label_truncation" << YAML::Value << s.label_truncation;
  e << YAML::Key << "werner" << YAML::Value << num(s.werner);
  e << YAML::Key << "filter" << YAML::Value;
  if (!s.filter) {
    e << YAML::Null;
  } else {
    e << YAML::BeginMap;
    e << YAML::Key << "transmission" << YAML::Value << num(s.filter->transmission);
    e << YAML::Key << "purity_after" << YAML::Value << num(s.filter->purity_after);
    e << YAML::Key << "arm_a" << YAML::Value << s.filter->on_arm_a;
    e << YAML::Key << "arm_b" << YAML::Value << s.filter->on_arm_b;
    e << YAML::EndMap;
  }
  e << YAML::EndMap;
}

void set_mu(ExperimentConfig& c, double a, double b) {
  c.sources[0].mu = a;
  c.sources[1].mu = b;
}

void two_filters(ExperimentConfig& c, double purity_after) {
  // Filters on ch1 (source I, arm a) and ch4 (source II, arm b).
  c.sources[0].filter = FilterSpec{0.77, purity_after, true, false};
  c.sources[1].filter = FilterSpec{0.77, purity_after, false, true};
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig2", "fig3a", "fig3b", "fig3c", "fig4", "fig5a", "fig5b", "table1"};
  return names;
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  set_mu(c, 0.1, 0.106);
  if (name == "fig2") {
    c.source_test.tested_sources = {1, 2};
  } else if (name == "fig3a") {
    for (auto& s : c.sources) s.purity = 0.784;
  } else if (name == "fig3b") {
    two_filters(c, 0.851);
  } else if (name == "fig3c") {
    for (auto& s : c.sources) s.filter = FilterSpec{0.77, 0.872, true, true};
  } else if (name == "fig4") {
    two_filters(c, 0.851);
    c.teleport.settings = {{90.0, 90.0}, {90.0, 0.0}, {45.0, 45.0}, {45.0, 135.0}};
  } else if (name == "table1") {
    two_filters(c, 0.851);
    c.teleport.settings = {{0.0, 0.0},   {0.0, 90.0},  {90.0, 0.0},   {90.0, 90.0},
                           {45.0, 45.0}, {45.0, 135.0}, {135.0, 45.0}, {135.0, 135.0}};
  } else if (name == "fig5a") {
    two_filters(c, 0.851);
  } else if (name == "fig5b") {
    two_filters(c, 0.851);
    set_mu(c, 0.05, 0.053);
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("preset: unknown preset '" + name + "' (known: " + known + ")");
  }
  return c;
}

ExperimentConfig parse_config_text(std::string_view yaml) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed YAML: ") + e.what());
  }
  ExperimentConfig c;
  if (!root || root.IsNull()) return c;
  if (!root.IsMap()) throw ConfigError("<root>: expected a mapping");
  if (const auto p = root["preset"]) c = preset_config(as_string(p, "preset"));
  apply(root, c);
  validate_config(c);
  return c;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string emit_config(const ExperimentConfig& c) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  if (!c.preset.empty()) e << YAML::Key << "preset" << YAML::Value << c.preset;
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "pulses" << YAML::Value << c.pulses;
  e << YAML::Key << "workers" << YAML::Value << c.workers;
  e << YAML::Key << "nmax" << YAML::Value << c.nmax;
  e << YAML::Key << "rep_rate" << YAML::Value << num(c.rep_rate);
  e << YAML::Key << "splitter_ratio" << YAML::Value << num(c.splitter_ratio);
  e << YAML::Key << "background_passes" << YAML::Value << c.background_passes;
  e << YAML::Key << "spectrum" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "fwhm_nm" << YAML::Value << num(c.fwhm_nm);
  e << YAML::Key << "center_nm" << YAML::Value << num(c.center_nm);
  e << YAML::EndMap;
  e << YAML::Key << "limits" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "photon_cap" << YAML::Value << c.limits.photon_cap;
  e << YAML::Key << "max_pairs_per_source" << YAML::Value << c.limits.max_pairs_per_source;
  e << YAML::Key << "require_both_sources" << YAML::Value << c.limits.require_both_sources;
  e << YAML::EndMap;
  e << YAML::Key << "sources" << YAML::Value << YAML::BeginSeq;
  emit_source(e, c.sources[0]);
  emit_source(e, c.sources[1]);
  e << YAML::EndSeq;
  e << YAML::Key << "detector" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "eta_max" << YAML::Value << num(c.detector.eta_max);
  e << YAML::Key << "eta_min" << YAML::Value << num(c.detector.eta_min);
  e << YAML::Key << "axis_deg" << YAML::Value << num(c.detector.axis_deg);
  e << YAML::Key << "dark_count_rate" << YAML::Value << num(c.detector.dark_count_rate);
  e << YAML::Key << "dead_time_pulses" << YAML::Value << c.detector.dead_time_pulses;
  e << YAML::Key << "model" << YAML::Value << to_string(c.detector.model);
  e << YAML::EndMap;
  e << YAML::Key << "delays_ps" << YAML::Value;
  emit_doubles(e, c.delays_ps);
  e << YAML::Key << "source_test" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "tested_sources" << YAML::Value << YAML::Flow << c.source_test.tested_sources;
  e << YAML::Key << "theta1" << YAML::Value;
  emit_doubles(e, c.source_test.theta1);
  e << YAML::Key << "theta2" << YAML::Value;
  emit_doubles(e, c.source_test.theta2);
  e << YAML::EndMap;
  e << YAML::Key << "hom" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "polarizers" << YAML::Value;
  emit_doubles(e, {c.hom.polarizers.begin(), c.hom.polarizers.end()});
  e << YAML::EndMap;
  e << YAML::Key << "teleport" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "settings" << YAML::Value << YAML::BeginSeq;
  for (const auto& [a, b] : c.teleport.settings) emit_doubles(e, {a, b});
  e << YAML::EndSeq << YAML::EndMap;
  e << YAML::Key << "swap" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "theta2" << YAML::Value;
  emit_doubles(e, c.swap.theta2);
  e << YAML::Key << "theta3" << YAML::Value;
  emit_doubles(e, c.swap.theta3);
  e << YAML::Key << "delay_ps" << YAML::Value << num(c.swap.delay_ps);
  e << YAML::EndMap;
  e << YAML::Key << "rates" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "fourfold_setup" << YAML::Value << setup_name(c.rates.fourfold_setup);
  e << YAML::EndMap;
  e << YAML::Key << "validate" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mu" << YAML::Value;
  emit_doubles(e, c.validate.mu);
  e << YAML::Key << "scenarios" << YAML::Value << YAML::Flow << c.validate.scenarios;
  e << YAML::Key << "require_both_sources" << YAML::Value << c.validate.require_both_sources;
  e << YAML::Key << "config_cap" << YAML::Value << static_cast<std::uint64_t>(c.validate.config_cap);
  e << YAML::EndMap;
  e << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "scenario" << YAML::Value << c.sweep.scenario;
  e << YAML::Key << "parameter" << YAML::Value << c.sweep.parameter;
  e << YAML::Key << "values" << YAML::Value;
  emit_doubles(e, c.sweep.values);
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace swapsim
