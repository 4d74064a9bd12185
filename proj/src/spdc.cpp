#include "swapsim/spdc.h"

#include <cmath>
#include <numbers>
#include <numeric>

namespace swapsim {

std::string to_string(BellState b) {
  switch (b) {
    case BellState::PsiMinus:
      return "psi-";
    case BellState::PsiPlus:
      return "psi+";
    case BellState::PhiMinus:
      return "phi-";
    case BellState::PhiPlus:
      return "phi+";
  }
  return "?";
}

void SourceParams::validate() const {
  if (!(mu >= 0.0)) throw ValidationError("mu must be >= 0");
  if (!(purity > 0.0 && purity <= 1.0)) throw ValidationError("purity must lie in (0, 1]");
  if (!(transmission_a >= 0.0 && transmission_a <= 1.0) || !(transmission_b >= 0.0 && transmission_b <= 1.0))
    throw ValidationError("arm transmission must lie in [0, 1]");
  if (!(werner >= 0.0 && werner <= 1.0)) throw ValidationError("werner admixture must lie in [0, 1]");
  if (label_truncation < 0) throw ValidationError("label truncation must be >= 0");
  if (filter) {
    if (!(filter->transmission >= 0.0 && filter->transmission <= 1.0))
      throw ValidationError("filter transmission must lie in [0, 1]");
    if (!(filter->purity_after > 0.0 && filter->purity_after <= 1.0))
      throw ValidationError("filter purity_after must lie in (0, 1]");
    if (filter->purity_after < purity) throw ValidationError("filter purity_after must be >= purity");
  }
}

double schmidt_ratio(double purity) {
  if (!(purity > 0.0 && purity <= 1.0)) throw ValidationError("purity must lie in (0, 1]");
  return (1.0 - purity) / (1.0 + purity);
}

int auto_truncation(double purity) {
  const double x = schmidt_ratio(purity);
  if (x == 0.0) return 0;
  // Tail beyond L is x^(L+1).
  int L = 0;
  while (std::pow(x, L + 1) > 1e-6) ++L;
  return L;
}

std::vector<double> schmidt_weights(double purity, int truncation) {
  const double x = schmidt_ratio(purity);
  const int L = truncation > 0 ? truncation : auto_truncation(purity);
  std::vector<double> w(static_cast<std::size_t>(L + 1));
  double xk = 1.0;
  for (auto& v : w) {
    v = (1.0 - x) * xk;
    xk *= x;
  }
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= s;
  return w;
}

int PairEmission::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

double thermal_probability(double mean, int n) {
  if (n < 0) return 0.0;
  return std::pow(mean, n) / std::pow(1.0 + mean, n + 1);
}

namespace {

// Geometric draw with P(n) = (1-r) r^n.
int geometric(double r, Rng& rng) {
  if (r <= 0.0) return 0;
  const double u = 1.0 - rng.uniform();  // (0, 1]
  return static_cast<int>(std::floor(std::log(u) / std::log(r)));
}

}  // namespace

EmissionSampler::EmissionSampler(double mu, std::span<const double> weights) : mu_(mu) {
  for (double w : weights) {
    const double m = mu * w;
    pk0_.push_back(1.0 / (1.0 + m));
    r_.push_back(m / (1.0 + m));
    p0_ *= pk0_.back();
  }
}

int EmissionSampler::sample(Rng& rng, bool nonvacuum, PairEmission& e) const {
  const std::size_t n = pk0_.size();
  e.counts.assign(n, 0);
  if (mu_ <= 0.0) {
    if (nonvacuum) throw ValidationError("cannot condition on a pair when mu = 0");
    rng.uniform();
    return 0;
  }
  double u = rng.uniform();
  if (!nonvacuum) {
    if (u < p0_) return 0;
    u = (u - p0_) / (1.0 - p0_);
  }
  double prefix = 1.0;
  std::size_t first = n - 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double mass = prefix * (1.0 - pk0_[k]) / (1.0 - p0_);
    if (u < mass || k + 1 == n) {
      first = k;
      break;
    }
    u -= mass;
    prefix *= pk0_[k];
  }
  int total = 0;
  for (std::size_t k = first; k < n; ++k) {
    e.counts[k] = geometric(r_[k], rng) + (k == first ? 1 : 0);
    total += e.counts[k];
  }
  return total;
}

PairEmission sample_emission(const SourceParams& params, std::span<const double> weights, Rng& rng,
                             bool nonvacuum) {
  PairEmission e;
  EmissionSampler(params.mu, weights).sample(rng, nonvacuum, e);
  return e;
}

PairEmission sample_emission(const SourceParams& params, Rng& rng) {
  const auto w = schmidt_weights(params.purity, params.label_truncation);
  return sample_emission(params, w, rng);
}

SourceParams apply_filter(const SourceParams& params) {
  if (!params.filter) return params;
  SourceParams out = params;
  const auto& f = *params.filter;
  if (f.on_arm_a) out.transmission_a *= f.transmission;
  if (f.on_arm_b) out.transmission_b *= f.transmission;
  out.purity = f.purity_after;
  out.filter.reset();
  return out;
}

double label_retention(double tau_ps, double sigma_tau_ps) {
  if (sigma_tau_ps <= 0.0) throw ValidationError("coherence time must be positive");
  return std::exp(-tau_ps * tau_ps / (2.0 * sigma_tau_ps * sigma_tau_ps));
}

double coherence_sigma_ps(double fwhm_nm, double center_nm) {
  if (!(fwhm_nm > 0.0 && center_nm > 0.0)) throw ValidationError("spectral width and centre must be positive");
  constexpr double c = 299792458.0;
  const double dnu = c * fwhm_nm * 1e-9 / ((center_nm * 1e-9) * (center_nm * 1e-9));
  const double sigma_omega = 2.0 * std::numbers::pi * dnu / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  return 1e12 / (2.0 * sigma_omega);
}

void resolve_pairs(const PairEmission& emission, int source, const SourceParams& params, bool delayed_arm_b,
                   double retention, int& next_fresh_label, Rng& rng, std::vector<PairSpec>& out) {
  for (std::size_t k = 0; k < emission.counts.size(); ++k) {
    for (int n = 0; n < emission.counts[k]; ++n) {
      PairSpec p;
      p.source = source;
      p.label_a = static_cast<int>(k);
      p.label_b = static_cast<int>(k);
      p.bell = params.bell;
      if (params.werner > 0.0 && rng.uniform() < params.werner)
        p.type = static_cast<PairType>(1 + static_cast<int>(rng.uniform() * 4.0) % 4);
      if (delayed_arm_b && retention < 1.0 && rng.uniform() >= retention) p.label_b = next_fresh_label++;
      out.push_back(p);
    }
  }
}

namespace {

struct CreationTerm {
  Pol pa, pb;
  double coeff;
};

std::vector<CreationTerm> pair_terms(const PairSpec& p) {
  const double s = 1.0 / std::sqrt(2.0);
  switch (p.type) {
    case PairType::HH:
      return {{Pol::H, Pol::H, 1.0}};
    case PairType::HV:
      return {{Pol::H, Pol::V, 1.0}};
    case PairType::VH:
      return {{Pol::V, Pol::H, 1.0}};
    case PairType::VV:
      return {{Pol::V, Pol::V, 1.0}};
    case PairType::Bell:
      break;
  }
  switch (p.bell) {
    case BellState::PsiMinus:
      return {{Pol::H, Pol::V, s}, {Pol::V, Pol::H, -s}};
    case BellState::PsiPlus:
      return {{Pol::H, Pol::V, s}, {Pol::V, Pol::H, s}};
    case BellState::PhiMinus:
      return {{Pol::H, Pol::H, s}, {Pol::V, Pol::V, -s}};
    case BellState::PhiPlus:
      return {{Pol::H, Pol::H, s}, {Pol::V, Pol::V, s}};
  }
  return {};
}

}  // namespace

SparseState emit_state(std::span<const PairSpec> pairs, RegistryPtr registry) {
  SparseState state(registry);
  for (const auto& p : pairs) {
    if (p.source < 0 || p.source > 1) throw ValidationError("pair source must be 0 or 1");
    const auto ports = kSourcePorts[p.source];
    auto next = SparseState::zero(registry);
    for (const auto& t : pair_terms(p)) {
      SparseState branch = state;
      branch.create({ports.a, t.pa, p.label_a});
      branch.create({ports.b, t.pb, p.label_b});
      for (const auto& [pat, amp] : branch.terms()) next.add(pat, amp * t.coeff);
    }
    next.prune();
    state = std::move(next);
  }
  state.normalize();
  return state;
}

SparseState emit_state(const PairEmission& emission, const SourceParams& params, int source, RegistryPtr registry,
                       double delay_tau_ps, double sigma_tau_ps, Rng& rng) {
  const bool delayed = source == 1;
  const double q = delayed ? label_retention(delay_tau_ps, sigma_tau_ps) : 1.0;
  int fresh = static_cast<int>(emission.counts.size());
  std::vector<PairSpec> pairs;
  resolve_pairs(emission, source, params, delayed, q, fresh, rng, pairs);
  if (fresh > registry->label_count()) throw ConfigError("registry has too few spectral labels");
  return emit_state(pairs, std::move(registry));
}

}  // namespace swapsim
