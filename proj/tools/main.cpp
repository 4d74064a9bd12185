// swapsim command-line front end.
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "swapsim/config.h"
#include "swapsim/experiments.h"
#include "swapsim/report.h"

namespace fs = std::filesystem;
using namespace swapsim;

namespace {

enum Exit { kOk = 0, kFailed = 1, kUsage = 2, kIo = 3 };

struct Flags {
  std::string config;
  std::string preset;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::uint64_t pulses = 0;
  int workers = -1;
  int nmax = 0;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + p.string() + "'");
}

ExperimentConfig load(const std::string& command, const Flags& f, const CLI::App& sub) {
  if (!f.config.empty() && !f.preset.empty())
    throw ConfigError("--preset and --config are mutually exclusive; set 'preset:' inside the config file instead");
  if (sub.count("--nmax") && command != "validate") throw ConfigError("--nmax only applies to validate");
  ExperimentConfig c = !f.config.empty() ? parse_config(f.config)
                       : !f.preset.empty() ? preset_config(f.preset)
                                           : ExperimentConfig{};
  if (sub.count("--seed")) c.seed = f.seed;
  if (sub.count("--pulses")) c.pulses = f.pulses;
  if (sub.count("--workers")) c.workers = f.workers;
  if (sub.count("--nmax")) c.nmax = f.nmax;
  validate_config(c);
  return c;
}

fs::path output_dir(const Flags& f) {
  if (!f.out_dir.empty()) return f.out_dir;
  if (const char* env = std::getenv("SWAPSIM_OUT_DIR"); env && *env) return env;
  return "out";
}

int run(const std::string& command, const Flags& f, const CLI::App& sub) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load(command, f, sub);
  const fs::path dir = output_dir(f);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

  RunInfo info{command, make_run_id(command, cfg), command + ".manifest.json", &cfg};
  std::string csv, summary;
  int status = kOk;

  if (command == "source-test" || command == "hom" || command == "teleport" || command == "swap") {
    const auto r = command == "source-test" ? run_source_test(cfg)
                   : command == "hom"       ? run_hom(cfg)
                   : command == "teleport"  ? run_teleportation(cfg)
                                            : run_swapping(cfg);
    csv = curves_csv(info, r);
    summary = summary_json(info, r);
    for (const auto& c : r.curves)
      std::cout << c.label << ": V_raw=" << format_number(c.v_raw_expected.value)
                << " V_net=" << format_number(c.v_net_expected.value) << " (counts: " << format_number(c.v_raw.value)
                << " / " << format_number(c.v_net.value) << ")\n";
  } else if (command == "rates") {
    const auto r = run_rates(cfg);
    csv = rates_csv(info, r);
    summary = summary_json(info, r);
    std::cout << "two-fold cps: " << format_number(r.twofold_cps[0]) << " / " << format_number(r.twofold_cps[1])
              << ", four-fold cps (" << setup_name(r.fourfold_setup) << "): " << format_number(r.fourfold_cps_expected)
              << "\n";
  } else if (command == "validate") {
    const auto r = validate(cfg);
    csv = validation_csv(info, r);
    summary = summary_json(info, r);
    for (const auto& row : r.rows)
      std::cout << row.scenario << " mu=" << format_number(row.mu) << " " << row.observable
                << " z=" << format_number(row.z) << "\n";
    std::cout << "max |z| = " << format_number(r.max_abs_z()) << (r.passed() ? " (pass)\n" : " (FAIL)\n");
    if (!r.passed()) status = kFailed;
  } else {
    const auto r = run_sweep(cfg);
    csv = sweep_csv(info, r);
    summary = summary_json(info, r);
    for (const auto& p : r)
      for (const auto& c : p.result.curves)
        std::cout << cfg.sweep.parameter << "=" << format_number(p.value) << " " << c.label
                  << " V_raw=" << format_number(c.v_raw_expected.value) << "\n";
  }

  const auto csv_path = dir / (command + ".csv");
  const auto json_path = dir / (command + ".summary.json");
  write_file(csv_path, csv);
  write_file(json_path, summary);
  RunManifest m{info, cfg.seed, 0.0, {csv_path.string(), json_path.string()}};
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(dir / info.manifest_file, manifest_json(m));
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator of two-source SPDC teleportation and entanglement-swapping experiments"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"source-test", "polarization correlation fringes of each source"},
      {"hom", "four-fold HOM dip between the two sources"},
      {"teleport", "teleportation dips for polarizer settings"},
      {"swap", "entanglement-swapping fringes"},
      {"rates", "single, two-fold and four-fold count rates"},
      {"validate", "Monte Carlo versus exact enumeration"},
      {"sweep", "visibility versus mu or repetition rate"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--config", flags.config, "YAML configuration file")->check(CLI::ExistingFile);
    s->add_option("--preset", flags.preset, "named preset: fig2 fig3a fig3b fig3c fig4 fig5a fig5b table1");
    s->add_option("--seed", flags.seed, "master seed");
    s->add_option("--pulses", flags.pulses, "pulses per setting");
    s->add_option("--out-dir", flags.out_dir, "output directory (default $SWAPSIM_OUT_DIR or ./out)");
    s->add_option("--workers", flags.workers, "OpenMP workers (0 = all)");
    s->add_option("--nmax", flags.nmax, "pair truncation for validate");
    subs.push_back(s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  for (auto* s : subs) {
    if (!s->parsed()) continue;
    try {
      return run(s->get_name(), flags, *s);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kUsage;
    } catch (const ValidationError& e) {
      std::cerr << "invalid setting: " << e.what() << "\n";
      return kUsage;
    } catch (const IoError& e) {
      std::cerr << "i/o error: " << e.what() << "\n";
      return kIo;
    }
  }
  return kUsage;
}
