#include "swapsim/report.h"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "swapsim/config.h"

#ifndef SWAPSIM_VERSION
#define SWAPSIM_VERSION "dev"
#endif

namespace swapsim {

using nlohmann::ordered_json;

std::string version() { return SWAPSIM_VERSION; }

std::string make_run_id(const std::string& command, const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char ch : command + "\n" + emit_config(cfg) + version()) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

namespace {

std::string csv_header(const RunInfo& info) {
  return "# manifest=" + info.manifest_file + " run_id=" + info.run_id + " command=" + info.command + "\n";
}

ordered_json header_json(const RunInfo& info) {
  ordered_json j;
  j["command"] = info.command;
  j["run_id"] = info.run_id;
  j["manifest"] = info.manifest_file;
  j["version"] = version();
  if (info.config) {
    j["seed"] = info.config->seed;
    j["pulses"] = info.config->pulses;
    j["rep_rate"] = info.config->rep_rate;
  }
  return j;
}

ordered_json estimate(const Estimate& e) { return {{"value", e.value}, {"error", e.error}}; }

ordered_json curve_json(const CurveResult& c, double rep_rate) {
  ordered_json j;
  j["label"] = c.label;
  j["abscissa"] = c.abscissa;
  j["kind"] = c.dip ? "dip" : "fringe";
  j["v_raw"] = estimate(c.v_raw);
  j["v_net"] = estimate(c.v_net);
  j["v_raw_expected"] = estimate(c.v_raw_expected);
  j["v_net_expected"] = estimate(c.v_net_expected);
  j["fidelity_raw"] = c.fidelity_raw;
  j["fidelity_net"] = c.fidelity_net;
  j["entangled_raw"] = c.entangled_raw;
  j["entangled_net"] = c.entangled_net;
  j["physical"] = c.physical;
  double max_cps = 0.0;
  for (const auto& p : c.points)
    max_cps = std::max(max_cps, to_cps(p.tally.expected_raw.value, p.tally.pulses, rep_rate));
  j["max_raw_cps"] = max_cps;
  return j;
}

}  // namespace

std::string curves_csv(const RunInfo& info, const ExperimentResult& r) {
  std::ostringstream o;
  o << csv_header(info);
  o << "curve,abscissa,x,raw,background1,background2,net,raw_error,net_error,expected_raw,expected_raw_error,"
       "expected_net,expected_net_error,raw_cps,net_cps,expected_net_cps\n";
  for (const auto& c : r.curves) {
    for (const auto& p : c.points) {
      const auto& t = p.tally;
      const auto en = t.expected_net();
      o << c.label << ',' << c.abscissa << ',' << format_number(p.x) << ',' << t.raw << ',' << t.background1 << ','
        << t.background2 << ',' << t.net() << ',' << format_number(t.raw_error()) << ','
        << format_number(t.net_error()) << ',' << format_number(t.expected_raw.value) << ','
        << format_number(t.expected_raw.error) << ',' << format_number(en.value) << ',' << format_number(en.error)
        << ',' << format_number(to_cps(static_cast<double>(t.raw), t.pulses, r.rep_rate)) << ','
        << format_number(to_cps(static_cast<double>(t.net()), t.pulses, r.rep_rate)) << ','
        << format_number(to_cps(en.value, t.pulses, r.rep_rate)) << '\n';
    }
  }
  return o.str();
}

std::string sweep_csv(const RunInfo& info, const std::vector<SweepPoint>& pts) {
  std::ostringstream o;
  o << csv_header(info);
  o << "value,mu1,mu2,rep_rate,curve,v_raw,v_raw_error,v_net,v_net_error,v_raw_expected,v_raw_expected_error,"
       "v_net_expected,v_net_expected_error\n";
  for (const auto& p : pts)
    for (const auto& c : p.result.curves)
      o << format_number(p.value) << ',' << format_number(p.mu[0]) << ',' << format_number(p.mu[1]) << ','
        << format_number(p.rep_rate) << ',' << c.label << ',' << format_number(c.v_raw.value) << ','
        << format_number(c.v_raw.error) << ',' << format_number(c.v_net.value) << ',' << format_number(c.v_net.error)
        << ',' << format_number(c.v_raw_expected.value) << ',' << format_number(c.v_raw_expected.error) << ','
        << format_number(c.v_net_expected.value) << ',' << format_number(c.v_net_expected.error) << '\n';
  return o.str();
}

std::string rates_csv(const RunInfo& info, const RateReport& r) {
  std::ostringstream o;
  o << csv_header(info);
  o << "quantity,cps\n";
  for (std::size_t i = 0; i < 4; ++i) o << "singles_ch" << i + 1 << ',' << format_number(r.singles_cps[i]) << '\n';
  for (std::size_t i = 0; i < 2; ++i) {
    o << "twofold_source" << i + 1 << ',' << format_number(r.twofold_cps[i]) << '\n';
    o << "twofold_source" << i + 1 << "_expected," << format_number(r.twofold_cps_expected[i]) << '\n';
  }
  o << "fourfold_" << setup_name(r.fourfold_setup) << ',' << format_number(r.fourfold_cps) << '\n';
  o << "fourfold_" << setup_name(r.fourfold_setup) << "_expected," << format_number(r.fourfold_cps_expected) << '\n';
  return o.str();
}

std::string validation_csv(const RunInfo& info, const ValidationReport& r) {
  std::ostringstream o;
  o << csv_header(info);
  o << "scenario,observable,mu,exact_probability,trials,count,mc_probability,z\n";
  for (const auto& row : r.rows)
    o << row.scenario << ',' << row.observable << ',' << format_number(row.mu) << ',' << format_number(row.exact)
      << ',' << row.trials << ',' << row.count << ','
      << format_number(static_cast<double>(row.count) / static_cast<double>(row.trials)) << ','
      << format_number(row.z) << '\n';
  return o.str();
}

std::string summary_json(const RunInfo& info, const ExperimentResult& r) {
  auto j = header_json(info);
  j["scenario"] = r.scenario;
  j["resampled"] = r.resampled;
  ordered_json curves = ordered_json::array();
  ordered_json vraw = ordered_json::array(), vnet = ordered_json::array();
  double min_net = 1.0;
  bool all_entangled = !r.curves.empty();
  for (const auto& c : r.curves) {
    curves.push_back(curve_json(c, r.rep_rate));
    vraw.push_back(c.v_raw_expected.value);
    vnet.push_back(c.v_net_expected.value);
    min_net = std::min(min_net, c.v_net_expected.value);
    all_entangled = all_entangled && c.entangled_net;
  }
  j["visibility_raw"] = vraw;
  j["visibility_net"] = vnet;
  j["min_visibility_net"] = min_net;
  j["min_fidelity_net"] = fidelity_from_visibility(std::clamp(min_net, 0.0, 1.0));
  j["all_entangled_net"] = all_entangled;
  j["curves"] = curves;
  return j.dump(2) + "\n";
}

std::string summary_json(const RunInfo& info, const std::vector<SweepPoint>& pts) {
  auto j = header_json(info);
  if (info.config) {
    j["scenario"] = info.config->sweep.scenario;
    j["parameter"] = info.config->sweep.parameter;
  }
  ordered_json arr = ordered_json::array();
  for (const auto& p : pts) {
    ordered_json pj;
    pj["value"] = p.value;
    pj["mu"] = {p.mu[0], p.mu[1]};
    pj["rep_rate"] = p.rep_rate;
    ordered_json cs = ordered_json::array();
    for (const auto& c : p.result.curves) cs.push_back(curve_json(c, p.rep_rate));
    pj["curves"] = cs;
    arr.push_back(pj);
  }
  j["points"] = arr;
  return j.dump(2) + "\n";
}

std::string summary_json(const RunInfo& info, const RateReport& r) {
  auto j = header_json(info);
  ordered_json rates;
  rates["seconds"] = r.seconds;
  rates["singles_cps"] = r.singles_cps;
  rates["twofold_cps"] = r.twofold_cps;
  rates["twofold_cps_expected"] = r.twofold_cps_expected;
  rates["fourfold_setup"] = setup_name(r.fourfold_setup);
  rates["fourfold_cps"] = r.fourfold_cps;
  rates["fourfold_cps_expected"] = r.fourfold_cps_expected;
  rates["fourfold_cps_error"] = r.fourfold_cps_error;
  j["rates"] = rates;
  return j.dump(2) + "\n";
}

std::string summary_json(const RunInfo& info, const ValidationReport& r) {
  auto j = header_json(info);
  ordered_json v;
  v["nmax"] = r.nmax;
  v["max_abs_z"] = r.max_abs_z();
  v["passed"] = r.passed();
  ordered_json rows = ordered_json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"scenario", row.scenario},
                    {"observable", row.observable},
                    {"mu", row.mu},
                    {"exact_probability", row.exact},
                    {"trials", row.trials},
                    {"count", row.count},
                    {"z", row.z}});
  v["rows"] = rows;
  j["validation"] = v;
  return j.dump(2) + "\n";
}

std::string manifest_json(const RunManifest& m) {
  ordered_json j;
  j["command"] = m.info.command;
  j["run_id"] = m.info.run_id;
  j["version"] = version();
  j["seed"] = m.seed;
  j["wall_seconds"] = m.wall_seconds;
  j["outputs"] = m.outputs;
  j["config"] = m.info.config ? emit_config(*m.info.config) : std::string();
  return j.dump(2) + "\n";
}

}  // namespace swapsim
