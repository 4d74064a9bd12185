#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "swapsim/fock.h"
#include "swapsim/rng.h"

namespace swapsim {

struct DetectorParams {
  double eta_max = 0.79;
  double eta_min = 0.395;
  // Polarization angle of maximum efficiency, degrees.
  double axis_deg = 0.0;
  double dark_prob = 2.63e-5;
  int dead_time_pulses = 3;
  // Arriving polarization is always aligned with the axis, so efficiency is eta_max.
  bool matched = false;

  void validate() const;
  // eta_min + (eta_max - eta_min) cos^2(chi - axis), chi = 0 for H and 90 for V.
  double efficiency(Pol pol) const;
};

// Per-pulse dark probability; throws if rep_rate <= 0 or the result is >= 1.
double dark_prob_from_rate(double dcr, double rep_rate);

struct Detector {
  Port port;
  DetectorParams params;
};

inline constexpr int kMaxDetectors = 8;

struct ClickPattern {
  std::uint8_t mask = 0;

  bool clicked(int detector) const { return (mask >> detector) & 1U; }
  friend bool operator==(const ClickPattern&, const ClickPattern&) = default;
};

// Threshold detection of one pulse's photons: every photon is seen
// independently with its mode's efficiency, and a dark count may fire.
ClickPattern detect(const OccupationPattern& pattern, const ModeRegistry& registry,
                    std::span<const Detector> detectors, Rng& rng);

// Exact probability that detector `d` clicks for the given pattern.
double click_probability(const OccupationPattern& pattern, const ModeRegistry& registry, const Detector& d);

// Distribution over the 2^n click masks for one pattern (detectors independent).
std::vector<double> click_distribution(const OccupationPattern& pattern, const ModeRegistry& registry,
                                       std::span<const Detector> detectors);

// All detectors in `now` click in slot i and all in `previous` clicked in slot
// i-1. previous = 0 is an ordinary same-slot coincidence.
struct Coincidence {
  std::uint8_t now = 0;
  std::uint8_t previous = 0;
};

// Probability that every detector in `mask` clicks, from a mask distribution.
double subset_probability(std::span<const double> mask_probs, std::uint8_t mask);

// Counts coincidences over an ordered click stream. A registered click makes
// that detector blind for dead_time[d] following slots.
std::vector<std::uint64_t> tally(std::span<const ClickPattern> stream, std::span<const Coincidence> coincidences,
                                 std::span<const int> dead_time);

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

// Raw pass plus the two blocked-arm background passes of one setting.
// `expected_*` hold conditional-expectation estimates of the same counts.
struct TallyResult {
  std::string setting;
  std::uint64_t pulses = 0;
  double seconds = 0.0;

  std::uint64_t raw = 0;
  std::uint64_t background1 = 0;
  std::uint64_t background2 = 0;

  Estimate expected_raw;
  Estimate expected_b1;
  Estimate expected_b2;

  double raw_error() const;
  std::int64_t net() const;
  double net_error() const;
  Estimate net_counts() const;
  Estimate expected_net() const;
};

TallyResult background_subtract(const TallyResult& raw, const TallyResult& b1, const TallyResult& b2);

// (c_max - c_min) / (c_max + c_min).
double visibility(double c_max, double c_min);
// Same with Poisson-style error propagation; no range checks, since net
// counts can dip below zero from noise.
Estimate fringe_visibility(Estimate c_max, Estimate c_min);
// (plateau - dip) / plateau.
Estimate dip_visibility(Estimate plateau, Estimate dip);

// F = (3V + 1) / 4 for a Werner-like state.
double fidelity_from_visibility(double v);
// Strict V > 1/3.
bool is_entangled(double v);

}  // namespace swapsim
