#include "swapsim/enumeration.h"

#include <functional>
#include <string>

namespace swapsim {

namespace {

struct Weighted {
  PairEmission emission;
  double weight;
};

// All label-count vectors with lo <= total <= hi.
std::vector<Weighted> emissions(const SourceParams& p, const std::vector<double>& w, int lo, int hi) {
  std::vector<Weighted> out;
  PairEmission e;
  e.counts.assign(w.size(), 0);
  std::function<void(std::size_t, int, double)> rec = [&](std::size_t k, int left, double weight) {
    if (k == w.size()) {
      const int total = hi - left;
      if (total >= lo) out.push_back({e, weight});
      return;
    }
    for (int n = 0; n <= left; ++n) {
      e.counts[k] = n;
      rec(k + 1, left - n, weight * thermal_probability(p.mu * w[k], n));
    }
    e.counts[k] = 0;
  };
  rec(0, hi, 1.0);
  return out;
}

std::vector<PairSpec> base_pairs(const PairEmission& e, int source, const SourceParams& p) {
  std::vector<PairSpec> out;
  for (std::size_t k = 0; k < e.counts.size(); ++k)
    for (int n = 0; n < e.counts[k]; ++n) {
      PairSpec s;
      s.source = source;
      s.label_a = s.label_b = static_cast<int>(k);
      s.bell = p.bell;
      out.push_back(s);
    }
  return out;
}

}  // namespace

ExactResult enumerate_exact(const Engine& engine, std::size_t config_cap) {
  const auto& spec = engine.spec();
  const int nmax = spec.limits.max_pairs_per_source;
  if (nmax <= 0) throw ValidationError("enumeration needs a finite max_pairs_per_source");
  for (const auto& c : spec.coincidences)
    if (c.previous != 0) throw ValidationError("enumeration supports same-slot coincidences only");

  const int lo = spec.limits.require_both_sources ? 1 : 0;
  const auto e0 = emissions(spec.sources[0], engine.weights(0), lo, nmax);
  const auto e1 = emissions(spec.sources[1], engine.weights(1), lo, nmax);

  ExactResult out;
  out.probs.assign(spec.coincidences.size(), 0.0);
  TrajectoryCache cache(engine);
  const double q = spec.retention;

  for (const auto& a : e0) {
    for (const auto& b : e1) {
      const int pairs_total = a.emission.total() + b.emission.total();
      if (2 * pairs_total > spec.limits.photon_cap) continue;
      const double weight = a.weight * b.weight;
      out.included_mass += weight;
      if (pairs_total == 0) {
        ++out.configurations;
        for (std::size_t k = 0; k < out.probs.size(); ++k) out.probs[k] += weight * engine.vacuum_probs()[k];
        continue;
      }
      auto pairs = base_pairs(a.emission, 0, spec.sources[0]);
      const std::size_t first_delayed = pairs.size();
      for (const auto& p : base_pairs(b.emission, 1, spec.sources[1])) pairs.push_back(p);

      // Branch over admixture type and relabeling of each pair, in the order
      // the sampler draws them.
      std::function<void(std::size_t, int, double)> rec = [&](std::size_t i, int fresh, double w) {
        if (w == 0.0) return;
        if (i == pairs.size()) {
          if (++out.configurations > config_cap)
            throw ValidationError("enumeration exceeds the configuration cap; try nmax = " +
                                  std::to_string(std::max(1, nmax - 1)));
          auto& entry = cache.entry(canonicalize(pairs));
          const auto& p = cache.subset_probs(entry);
          for (std::size_t k = 0; k < p.size(); ++k) out.probs[k] += w * p[k];
          return;
        }
        const auto& src = spec.sources[pairs[i].source == 0 ? 0 : 1];
        const PairSpec saved = pairs[i];
        std::vector<std::pair<PairType, double>> types{{PairType::Bell, 1.0 - src.werner}};
        if (src.werner > 0.0)
          for (auto t : {PairType::HH, PairType::HV, PairType::VH, PairType::VV}) types.emplace_back(t, src.werner / 4);
        for (const auto& [type, pt] : types) {
          pairs[i].type = type;
          if (i >= first_delayed && q < 1.0) {
            pairs[i].label_b = saved.label_b;
            rec(i + 1, fresh, w * pt * q);
            pairs[i].label_b = fresh;
            rec(i + 1, fresh + 1, w * pt * (1.0 - q));
          } else {
            rec(i + 1, fresh, w * pt);
          }
          pairs[i] = saved;
        }
      };
      rec(0, engine.fresh_label_base(), weight);
    }
  }
  if (out.included_mass > 0.0)
    for (auto& p : out.probs) p /= out.included_mass;
  return out;
}

}  // namespace swapsim
