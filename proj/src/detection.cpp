#include "swapsim/detection.h"

#include <cmath>
#include <numbers>

namespace swapsim {

void DetectorParams::validate() const {
  if (!(eta_min >= 0.0 && eta_max <= 1.0 && eta_min <= eta_max))
    throw ValidationError("detector efficiencies need 0 <= eta_min <= eta_max <= 1");
  if (!(dark_prob >= 0.0 && dark_prob < 1.0)) throw ValidationError("dark_prob must lie in [0, 1)");
  if (dead_time_pulses < 0) throw ValidationError("dead_time_pulses must be >= 0");
}

double DetectorParams::efficiency(Pol pol) const {
  if (matched) return eta_max;
  const double chi = pol == Pol::H ? 0.0 : 90.0;
  const double c = std::cos((chi - axis_deg) * std::numbers::pi / 180.0);
  return eta_min + (eta_max - eta_min) * c * c;
}

double dark_prob_from_rate(double dcr, double rep_rate) {
  if (!(rep_rate > 0.0)) throw ValidationError("repetition rate must be positive");
  if (!(dcr >= 0.0)) throw ValidationError("dark count rate must be >= 0");
  const double p = dcr / rep_rate;
  if (p >= 1.0) throw ValidationError("dark count rate must stay below the repetition rate");
  return p;
}

namespace {

int detector_of(Port p, std::span<const Detector> detectors) {
  for (std::size_t i = 0; i < detectors.size(); ++i)
    if (detectors[i].port == p) return static_cast<int>(i);
  return -1;
}

}  // namespace

ClickPattern detect(const OccupationPattern& pattern, const ModeRegistry& registry,
                    std::span<const Detector> detectors, Rng& rng) {
  if (detectors.size() > kMaxDetectors) throw ValidationError("too many detectors");
  ClickPattern out;
  for (int m = 0; m < pattern.size(); ++m) {
    const int n = pattern[m];
    if (n == 0) continue;
    const ModeKey key = registry.key(m);
    const int d = detector_of(key.port, detectors);
    if (d < 0) continue;
    const double eta = detectors[static_cast<std::size_t>(d)].params.efficiency(key.pol);
    for (int k = 0; k < n; ++k)
      if (rng.uniform() < eta) out.mask |= static_cast<std::uint8_t>(1U << d);
  }
  for (std::size_t d = 0; d < detectors.size(); ++d)
    if (rng.uniform() < detectors[d].params.dark_prob) out.mask |= static_cast<std::uint8_t>(1U << d);
  return out;
}

double click_probability(const OccupationPattern& pattern, const ModeRegistry& registry, const Detector& d) {
  double none = 1.0 - d.params.dark_prob;
  for (int m = 0; m < pattern.size(); ++m) {
    const int n = pattern[m];
    if (n == 0) continue;
    const ModeKey key = registry.key(m);
    if (key.port != d.port) continue;
    none *= std::pow(1.0 - d.params.efficiency(key.pol), n);
  }
  return 1.0 - none;
}

std::vector<double> click_distribution(const OccupationPattern& pattern, const ModeRegistry& registry,
                                       std::span<const Detector> detectors) {
  const std::size_t n = detectors.size();
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = click_probability(pattern, registry, detectors[i]);
  std::vector<double> out(std::size_t{1} << n, 1.0);
  for (std::size_t mask = 0; mask < out.size(); ++mask)
    for (std::size_t i = 0; i < n; ++i) out[mask] *= ((mask >> i) & 1U) ? p[i] : 1.0 - p[i];
  return out;
}

double subset_probability(std::span<const double> mask_probs, std::uint8_t mask) {
  double s = 0.0;
  for (std::size_t m = 0; m < mask_probs.size(); ++m)
    if ((m & mask) == mask) s += mask_probs[m];
  return s;
}

std::vector<std::uint64_t> tally(std::span<const ClickPattern> stream, std::span<const Coincidence> coincidences,
                                 std::span<const int> dead_time) {
  std::vector<std::uint64_t> counts(coincidences.size(), 0);
  std::vector<std::int64_t> dead_until(dead_time.size(), -1);
  std::uint8_t previous = 0;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto slot = static_cast<std::int64_t>(i);
    std::uint8_t registered = 0;
    for (std::size_t d = 0; d < dead_time.size(); ++d) {
      if (!stream[i].clicked(static_cast<int>(d)) || dead_until[d] >= slot) continue;
      registered |= static_cast<std::uint8_t>(1U << d);
      dead_until[d] = slot + dead_time[d];
    }
    for (std::size_t c = 0; c < coincidences.size(); ++c) {
      const auto& co = coincidences[c];
      if ((registered & co.now) == co.now && (previous & co.previous) == co.previous) ++counts[c];
    }
    previous = registered;
  }
  return counts;
}

double TallyResult::raw_error() const { return std::sqrt(static_cast<double>(raw)); }

std::int64_t TallyResult::net() const {
  return static_cast<std::int64_t>(raw) - static_cast<std::int64_t>(background1 + background2);
}

double TallyResult::net_error() const { return std::sqrt(static_cast<double>(raw + background1 + background2)); }

Estimate TallyResult::net_counts() const { return {static_cast<double>(net()), net_error()}; }

Estimate TallyResult::expected_net() const {
  return {expected_raw.value - expected_b1.value - expected_b2.value,
          std::sqrt(expected_raw.error * expected_raw.error + expected_b1.error * expected_b1.error +
                    expected_b2.error * expected_b2.error)};
}

TallyResult background_subtract(const TallyResult& raw, const TallyResult& b1, const TallyResult& b2) {
  if (raw.pulses != b1.pulses || raw.pulses != b2.pulses)
    throw ValidationError("background passes must cover the same number of pulses");
  if (raw.setting != b1.setting || raw.setting != b2.setting)
    throw ValidationError("background passes must share the setting");
  TallyResult out = raw;
  out.background1 = b1.raw;
  out.background2 = b2.raw;
  out.expected_b1 = b1.expected_raw;
  out.expected_b2 = b2.expected_raw;
  return out;
}

double visibility(double c_max, double c_min) {
  if (!(c_max > 0.0)) throw ValidationError("visibility undefined for c_max = 0");
  if (!(c_min >= 0.0 && c_max >= c_min)) throw ValidationError("visibility needs c_max >= c_min >= 0");
  return (c_max - c_min) / (c_max + c_min);
}

Estimate fringe_visibility(Estimate c_max, Estimate c_min) {
  const double s = c_max.value + c_min.value;
  if (s <= 0.0) return {0.0, 0.0};
  const double v = (c_max.value - c_min.value) / s;
  const double e = 2.0 * std::hypot(c_min.value * c_max.error, c_max.value * c_min.error) / (s * s);
  return {v, e};
}

Estimate dip_visibility(Estimate plateau, Estimate dip) {
  if (plateau.value <= 0.0) return {0.0, 0.0};
  const double r = dip.value / plateau.value;
  const double e = std::hypot(dip.error / plateau.value, r * plateau.error / plateau.value);
  return {1.0 - r, e};
}

double fidelity_from_visibility(double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("visibility must lie in [0, 1]");
  return (3.0 * v + 1.0) / 4.0;
}

bool is_entangled(double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("visibility must lie in [0, 1]");
  return v > 1.0 / 3.0;
}

}  // namespace swapsim
