#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swapsim/experiments.h"

namespace swapsim {

std::string version();

// Stable identifier of a run: hash of the command and the full config snapshot.
std::string make_run_id(const std::string& command, const ExperimentConfig& cfg);

// Six significant digits, dot decimal.
std::string format_number(double v);

struct RunInfo {
  std::string command;
  std::string run_id;
  std::string manifest_file;
  const ExperimentConfig* config = nullptr;
};

std::string curves_csv(const RunInfo& info, const ExperimentResult& r);
std::string sweep_csv(const RunInfo& info, const std::vector<SweepPoint>& pts);
std::string rates_csv(const RunInfo& info, const RateReport& r);
std::string validation_csv(const RunInfo& info, const ValidationReport& r);

// Summary JSON: contains no timing, so repeated runs give identical bytes.
std::string summary_json(const RunInfo& info, const ExperimentResult& r);
std::string summary_json(const RunInfo& info, const std::vector<SweepPoint>& pts);
std::string summary_json(const RunInfo& info, const RateReport& r);
std::string summary_json(const RunInfo& info, const ValidationReport& r);

struct RunManifest {
  RunInfo info;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;
};

std::string manifest_json(const RunManifest& m);

}  // namespace swapsim
