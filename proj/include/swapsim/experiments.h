#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swapsim/detection.h"
#include "swapsim/engine.h"
#include "swapsim/optics.h"
#include "swapsim/spdc.h"

namespace swapsim {

// Channel transmission giving an overall arm efficiency of 0.2 together with
// a 0.79 detector.
inline constexpr double kDefaultArmTransmission = 0.2 / 0.79;

enum class DetectorModel {
  Auto,          // polarization-dependent on the HOM/teleport splitter outputs, matched elsewhere
  Matched,       // always eta_max
  Polarization,  // always the cos^2 interpolation
};

std::string to_string(DetectorModel m);

struct DetectorConfig {
  double eta_max = 0.79;
  double eta_min = 0.395;
  double axis_deg = 0.0;
  double dark_count_rate = 2000.0;  // counts per second
  int dead_time_pulses = 3;
  DetectorModel model = DetectorModel::Auto;

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

struct SourceTestConfig {
  std::vector<int> tested_sources{1, 2};
  std::vector<double> theta1{0.0, 45.0, 90.0, 135.0};
  std::vector<double> theta2{0.0, 22.5, 45.0, 67.5, 90.0, 112.5, 135.0, 157.5, 180.0};

  friend bool operator==(const SourceTestConfig&, const SourceTestConfig&) = default;
};

struct HomConfig {
  std::array<double, 4> polarizers{0.0, 90.0, 90.0, 0.0};

  friend bool operator==(const HomConfig&, const HomConfig&) = default;
};

struct TeleportConfig {
  std::vector<std::pair<double, double>> settings{{90.0, 90.0}, {90.0, 0.0}, {45.0, 45.0}, {45.0, 135.0}};

  friend bool operator==(const TeleportConfig&, const TeleportConfig&) = default;
};

struct SwapConfig {
  std::vector<double> theta2{0.0, 45.0, 90.0, 135.0};
  std::vector<double> theta3{0.0, 22.5, 45.0, 67.5, 90.0, 112.5, 135.0, 157.5, 180.0};
  double delay_ps = 0.0;

  friend bool operator==(const SwapConfig&, const SwapConfig&) = default;
};

struct RatesConfig {
  SetupKind fourfold_setup = SetupKind::Swap;

  friend bool operator==(const RatesConfig&, const RatesConfig&) = default;
};

struct ValidateConfig {
  std::vector<double> mu{0.01, 0.1};
  std::vector<std::string> scenarios{"hom", "teleport", "swap"};
  bool require_both_sources = true;
  std::size_t config_cap = 2'000'000;

  friend bool operator==(const ValidateConfig&, const ValidateConfig&) = default;
};

struct SweepConfig {
  std::string scenario = "swap";  // hom | swap
  std::string parameter = "mu";   // mu | rep_rate
  std::vector<double> values{0.025, 0.05, 0.1, 0.2};

  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

SourceParams default_source();

struct ExperimentConfig {
  std::string preset;
  std::uint64_t seed = 1;
  std::uint64_t pulses = 1'000'000;
  int workers = 0;  // 0 = all available
  int nmax = 0;     // > 0 selects enumeration (validate)
  double rep_rate = 76e6;
  double fwhm_nm = 1.2;
  double center_nm = 1584.0;
  double splitter_ratio = 0.5;
  EmissionLimits limits;
  bool background_passes = true;
  std::array<SourceParams, 2> sources{default_source(), default_source()};
  DetectorConfig detector;
  std::vector<double> delays_ps{-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0};
  SourceTestConfig source_test;
  HomConfig hom;
  TeleportConfig teleport;
  SwapConfig swap;
  RatesConfig rates;
  ValidateConfig validate;
  SweepConfig sweep;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Throws ConfigError naming the offending key.
void validate_config(const ExperimentConfig& cfg);

// Per-pulse dark probability and detector parameters for one detector port.
DetectorParams detector_params(const ExperimentConfig& cfg, SetupKind kind, Port port);

// Pulse engine for one setting. `blocked_arm` (0..3) forces that arm's
// transmission to 0.
Engine make_engine(const ExperimentConfig& cfg, SetupKind kind, SetupSettings settings,
                   std::vector<Coincidence> coincidences, std::optional<int> blocked_arm = std::nullopt);

struct CurvePoint {
  double x = 0.0;
  TallyResult tally;
};

struct CurveResult {
  std::string label;
  std::string abscissa;  // theta2_deg, theta3_deg or delay_ps
  bool dip = false;
  std::vector<CurvePoint> points;

  // From integer counts.
  Estimate v_raw, v_net;
  // From conditional-expectation estimates of the same counts.
  Estimate v_raw_expected, v_net_expected;
  double fidelity_raw = 0.0, fidelity_net = 0.0;
  bool entangled_raw = false, entangled_net = false;
  bool physical = true;  // v_net inside [-0.05, 1.01]

  void finalize();
};

struct ExperimentResult {
  std::string scenario;
  double rep_rate = 0.0;
  std::vector<CurveResult> curves;
  std::uint64_t resampled = 0;
};

double to_cps(double counts, std::uint64_t pulses, double rep_rate);

ExperimentResult run_source_test(const ExperimentConfig& cfg);
ExperimentResult run_hom(const ExperimentConfig& cfg);
ExperimentResult run_teleportation(const ExperimentConfig& cfg);
ExperimentResult run_swapping(const ExperimentConfig& cfg);

struct RateReport {
  std::uint64_t pulses = 0;
  double seconds = 0.0;
  std::array<double, 4> singles_cps{};  // ch1..ch4, no polarizers
  std::array<double, 2> twofold_cps{};  // per source
  std::array<double, 2> twofold_cps_expected{};
  SetupKind fourfold_setup = SetupKind::Swap;
  double fourfold_cps = 0.0;
  double fourfold_cps_expected = 0.0;
  double fourfold_cps_error = 0.0;
};

RateReport run_rates(const ExperimentConfig& cfg);

struct ValidationRow {
  std::string scenario;
  std::string observable;
  double mu = 0.0;
  double exact = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t count = 0;
  double z = 0.0;
};

struct ValidationReport {
  int nmax = 0;
  std::vector<ValidationRow> rows;
  double max_abs_z() const;
  bool passed() const { return max_abs_z() < 3.0; }
};

ValidationReport validate(const ExperimentConfig& cfg);

struct SweepPoint {
  double value = 0.0;
  std::array<double, 2> mu{};
  double rep_rate = 0.0;
  ExperimentResult result;
};

std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg);

// Ideal single-pair, lossless, unit-efficiency algebra.
namespace ideal {

// Probability that both source-test detectors see a photon.
double source_test_coincidence(double theta1, double theta2, BellState bell = BellState::PsiMinus);
// Probability of one photon in each splitter output for a Bell state on ch1/ch4.
double bsm_coincidence(BellState input);
// A single photon alpha|H> + beta|V> on ch1 and a singlet on ch3/ch4; the
// splitter outputs each hold one photon. Returns the ch3 state fidelity with the input.
double teleport_fidelity(std::complex<double> alpha, std::complex<double> beta);
// ch2/ch3 state given one photon on each analyser output.
ConditionalState swap_conditional();
// Four-fold detection probability with polarizers theta2/theta3.
double swap_fringe(double theta2, double theta3);

}  // namespace ideal

}  // namespace swapsim
