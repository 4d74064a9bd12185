#pragma once

#include <optional>
#include <vector>

#include "swapsim/fock.h"
#include "swapsim/rng.h"

namespace swapsim {

enum class BellState { PsiMinus, PsiPlus, PhiMinus, PhiPlus };

std::string to_string(BellState b);

struct FilterSpec {
  double transmission = 0.77;
  double purity_after = 1.0;
  bool on_arm_a = true;
  bool on_arm_b = true;

  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

// One SPDC source. Arm a is the first fibre of the source (ch1 / ch3), arm b
// the second (ch2 / ch4).
struct SourceParams {
  double mu = 0.1;
  double purity = 0.82;
  BellState bell = BellState::PsiMinus;
  double transmission_a = 1.0;
  double transmission_b = 1.0;
  std::optional<FilterSpec> filter;
  // Largest Schmidt index kept; 0 picks the smallest index covering 1 - 1e-6.
  int label_truncation = 0;
  // Probability that a pair is emitted as a random product state instead.
  double werner = 0.0;

  void validate() const;
  friend bool operator==(const SourceParams&, const SourceParams&) = default;
};

// Geometric Schmidt spectrum lambda_k = (1-x) x^k with x = (1-P)/(1+P),
// truncated at `truncation` (0 = automatic) and renormalized.
std::vector<double> schmidt_weights(double purity, int truncation = 0);
double schmidt_ratio(double purity);
int auto_truncation(double purity);

struct PairEmission {
  std::vector<int> counts;  // pairs per Schmidt label

  int total() const;
};

// Probability of exactly n pairs in a thermal mode of mean m.
double thermal_probability(double mean, int n);

// Thermal pair numbers over Schmidt labels with the per-label constants
// precomputed. sample() draws P(vacuum) first, so empty pulses cost one
// uniform; otherwise the first occupied label comes from its conditional law
// and later labels are drawn freely. `nonvacuum` conditions on >= 1 pair.
class EmissionSampler {
 public:
  EmissionSampler(double mu, std::span<const double> weights);

  // Fills out.counts (resized to the label count) and returns the pair total.
  int sample(Rng& rng, bool nonvacuum, PairEmission& out) const;
  double vacuum_probability() const { return p0_; }

 private:
  double mu_;
  std::vector<double> pk0_;  // per-label vacuum probability
  std::vector<double> r_;    // per-label geometric ratio
  double p0_ = 1.0;
};

// One-off draw; `nonvacuum` conditions on at least one pair.
PairEmission sample_emission(const SourceParams& params, std::span<const double> weights, Rng& rng,
                             bool nonvacuum = false);
PairEmission sample_emission(const SourceParams& params, Rng& rng);

SourceParams apply_filter(const SourceParams& params);

// Fraction of the delayed photon's spectral mode that still overlaps the
// undelayed reference: exp(-tau^2 / (2 sigma^2)).
double label_retention(double tau_ps, double sigma_tau_ps);

// Coherence time from a Gaussian intensity spectrum of the given FWHM:
// sigma_omega = 2 pi (c dlambda / lambda^2) / (2 sqrt(2 ln 2)), sigma_tau = 1 / (2 sigma_omega).
double coherence_sigma_ps(double fwhm_nm, double center_nm);

enum class PairType { Bell, HH, HV, VH, VV };

// A created pair with the spectral label of each photon and its polarization form.
struct PairSpec {
  int source = 0;  // 0 or 1
  int label_a = 0;
  int label_b = 0;
  PairType type = PairType::Bell;
  BellState bell = BellState::PsiMinus;

  friend bool operator==(const PairSpec&, const PairSpec&) = default;
};

// Turns pair counts into explicit pairs: the delayed arm's photon keeps its
// label with probability `retention` and otherwise gets a fresh label taken
// from `next_fresh_label` (incremented). Werner admixture picks the type.
void resolve_pairs(const PairEmission& emission, int source, const SourceParams& params, bool delayed_arm_b,
                   double retention, int& next_fresh_label, Rng& rng, std::vector<PairSpec>& out);

struct SourcePorts {
  Port a;
  Port b;
};

inline constexpr SourcePorts kSourcePorts[2] = {{Port::Ch1, Port::Ch2}, {Port::Ch3, Port::Ch4}};

// Normalized product of pair-creation operators acting on vacuum. Identical
// pairs give the normalized (A^dagger)^n |0>.
SparseState emit_state(std::span<const PairSpec> pairs, RegistryPtr registry);

// Full chain for one source: resolve labels and build the state.
SparseState emit_state(const PairEmission& emission, const SourceParams& params, int source, RegistryPtr registry,
                       double delay_tau_ps, double sigma_tau_ps, Rng& rng);

}  // namespace swapsim
