#include "swapsim/engine.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <map>
#include <unordered_map>

#include <omp.h>

namespace swapsim {

Engine::Engine(EngineSpec spec) : spec_(std::move(spec)) {
  for (const auto& s : spec_.sources) {
    s.validate();
    if (s.filter) throw ValidationError("apply source filters before building the engine");
  }
  if (spec_.detectors.size() != spec_.circuit.detectors.size())
    throw ValidationError("need one detector parameter set per detector port");
  if (spec_.detectors.size() > static_cast<std::size_t>(kMaxDetectors)) throw ValidationError("too many detectors");
  if (!(spec_.retention >= 0.0 && spec_.retention <= 1.0)) throw ValidationError("retention must lie in [0, 1]");
  if (spec_.limits.photon_cap < 2) throw ValidationError("photon_cap must be >= 2");
  if (spec_.limits.max_pairs_per_source < 0) throw ValidationError("max_pairs_per_source must be >= 0");
  if (spec_.limits.require_both_sources)
    for (const auto& s : spec_.sources)
      if (s.mu <= 0.0) throw ValidationError("require_both_sources needs mu > 0 on both sources");

  const auto n = static_cast<unsigned>(spec_.detectors.size());
  for (const auto& c : spec_.coincidences) {
    if (c.now == 0) throw ValidationError("coincidence needs at least one detector in the current slot");
    if ((c.now >> n) != 0 || (c.previous >> n) != 0) throw ValidationError("coincidence names a missing detector");
  }

  for (std::size_t i = 0; i < spec_.detectors.size(); ++i) {
    spec_.detectors[i].validate();
    detectors_.push_back({spec_.circuit.detectors[i], spec_.detectors[i]});
  }
  for (int s = 0; s < 2; ++s) {
    const auto& p = spec_.sources[static_cast<std::size_t>(s)];
    weights_[static_cast<std::size_t>(s)] = schmidt_weights(p.purity, p.label_truncation);
  }
  for (std::size_t s = 0; s < 2; ++s) samplers_.emplace_back(spec_.sources[s].mu, weights_[s]);
  fresh_base_ = static_cast<int>(std::max(weights_[0].size(), weights_[1].size()));

  const auto ports = spec_.circuit.ports();
  const auto reg = std::make_shared<const ModeRegistry>(ports, 1);
  vacuum_masks_ = click_distribution(OccupationPattern(reg->size()), *reg, detectors_);
  for (const auto& c : spec_.coincidences) vacuum_probs_.push_back(subset_probability(vacuum_masks_, c.now));

  // Transfer matrix from source-fibre modes to detector modes, losses included.
  const auto& circuit = spec_.circuit;
  const std::size_t prefix = circuit.lossy_prefix();
  std::array<double, 4> arm_t{1.0, 1.0, 1.0, 1.0};
  for (std::size_t i = 0; i < prefix; ++i) {
    const auto* loss = std::get_if<element::Loss>(&circuit.elements[i]);
    if (loss == nullptr) throw ValidationError("only loss elements may precede the unitary circuit");
    const auto arm = static_cast<std::size_t>(loss->port);
    if (arm >= 4) throw ValidationError("losses ahead of the circuit must sit on ch1..ch4");
    arm_t[arm] *= loss->transmission;
  }
  const std::size_t nd = detectors_.size();
  // transfer(d, pol, in): amplitude for a photon entering mode `in` to reach detector d with polarization pol.
  std::vector<std::array<std::array<std::complex<double>, 8>, 2>> transfer(nd);
  for (int in = 0; in < 8; ++in) {
    auto s = SparseState::zero(reg);
    OccupationPattern p(reg->size());
    p.set(reg->index({static_cast<Port>(in / 2), in % 2 ? Pol::V : Pol::H, 0}), 1);
    s.add(p, std::sqrt(arm_t[static_cast<std::size_t>(in / 2)]));
    const auto out = apply_unitaries(s, circuit, prefix);
    for (std::size_t d = 0; d < nd; ++d)
      for (int k = 0; k < 2; ++k) {
        OccupationPattern q(reg->size());
        q.set(reg->index({detectors_[d].port, k ? Pol::V : Pol::H, 0}), 1);
        transfer[d][static_cast<std::size_t>(k)][static_cast<std::size_t>(in)] = out.amplitude(q);
      }
  }
  for (std::size_t a = 0; a < (std::size_t{1} << nd); ++a) {
    Kernel k = Kernel::Identity();
    for (std::size_t d = 0; d < nd; ++d) {
      if (((a >> d) & 1U) == 0) continue;
      for (int pol = 0; pol < 2; ++pol) {
        const double eta = detectors_[d].params.efficiency(pol ? Pol::V : Pol::H);
        const auto& row = transfer[d][static_cast<std::size_t>(pol)];
        for (int i = 0; i < 8; ++i)
          for (int j = 0; j < 8; ++j)
            k(i, j) -= eta * std::conj(row[static_cast<std::size_t>(i)]) * row[static_cast<std::size_t>(j)];
      }
    }
    kernels_.push_back(k);
  }
}

std::vector<int> Engine::dead_times() const {
  std::vector<int> d;
  for (const auto& p : spec_.detectors) d.push_back(p.dead_time_pulses);
  return d;
}

void canonicalize(std::span<const PairSpec> pairs, CanonicalPairs& out) {
  out.pairs.clear();
  out.key.clear();
  std::array<int, 64> map{};  // original label -> canonical + 1
  int next = 0;
  std::vector<std::pair<int, int>> overflow;
  auto relabel = [&](int label) {
    if (label >= 0 && label < static_cast<int>(map.size())) {
      auto& slot = map[static_cast<std::size_t>(label)];
      if (slot == 0) slot = ++next;
      return slot - 1;
    }
    for (const auto& [from, to] : overflow)
      if (from == label) return to;
    overflow.emplace_back(label, next);
    return next++;
  };
  for (auto p : pairs) {
    p.label_a = relabel(p.label_a);
    p.label_b = relabel(p.label_b);
    out.pairs.push_back(p);
    out.key.push_back(static_cast<char>(p.source));
    out.key.push_back(static_cast<char>(p.label_a));
    out.key.push_back(static_cast<char>(p.label_b));
    out.key.push_back(static_cast<char>(p.type));
    out.key.push_back(static_cast<char>(p.bell));
  }
  out.label_count = std::max(1, next);
}

CanonicalPairs canonicalize(std::span<const PairSpec> pairs) {
  CanonicalPairs out;
  canonicalize(pairs, out);
  return out;
}

namespace {

struct LossNode {
  SparseState state;
  std::vector<double> cum;  // cumulative branch probabilities
  std::vector<std::unique_ptr<LossNode>> children;

  bool leaf_ready = false;
  std::vector<OccupationPattern> patterns;
  std::vector<double> cdf;
  std::vector<double> masks;  // exact click-mask distribution at this leaf
  // Detected photons per pattern, in mode order: hits[hit_begin[i] .. hit_begin[i+1]).
  std::vector<std::uint32_t> hit_begin;
  std::vector<std::pair<std::uint8_t, double>> hits;  // (detector, efficiency), one per photon

  explicit LossNode(SparseState s) : state(std::move(s)) {}
};

bool pattern_less(const OccupationPattern& a, const OccupationPattern& b) {
  const auto x = a.counts();
  const auto y = b.counts();
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
}

// Ryser's formula; n <= photon cap.
std::complex<double> permanent(const std::complex<double>* m, int n, int stride) {
  if (n == 0) return 1.0;
  std::complex<double> total = 0.0;
  std::array<std::complex<double>, 16> row_sum{};
  std::uint32_t gray = 0;
  for (std::uint32_t k = 1; k < (1U << n); ++k) {
    const std::uint32_t next = k ^ (k >> 1);
    const int col = std::countr_zero(next ^ gray);
    const double sign = (next >> col) & 1U ? 1.0 : -1.0;
    gray = next;
    std::complex<double> prod = 1.0;
    for (int r = 0; r < n; ++r) {
      row_sum[static_cast<std::size_t>(r)] += sign * m[r * stride + col];
      prod *= row_sum[static_cast<std::size_t>(r)];
    }
    total += (std::popcount(gray) % 2 == n % 2 ? 1.0 : -1.0) * prod;
  }
  return total;
}

// Occupations of the eight source-fibre modes of one label, four bits each.
using LabelPattern = std::uint32_t;

int mode_count(LabelPattern u, int mode) { return static_cast<int>((u >> (4 * mode)) & 0xFU); }

int photons(LabelPattern u) {
  int n = 0;
  for (int m = 0; m < 8; ++m) n += mode_count(u, m);
  return n;
}

// <u| Gamma(K) |v> for equal photon numbers.
std::complex<double> gamma_element(const Engine::Kernel& k, LabelPattern u, LabelPattern v) {
  std::array<int, 16> rows{}, cols{};
  int n = 0, nc = 0;
  double norm = 1.0;
  for (int m = 0; m < 8; ++m) {
    for (int i = 0; i < mode_count(u, m); ++i) {
      rows[static_cast<std::size_t>(n++)] = m;
      norm *= i + 1;
    }
    for (int i = 0; i < mode_count(v, m); ++i) {
      cols[static_cast<std::size_t>(nc++)] = m;
      norm *= i + 1;
    }
  }
  std::array<std::complex<double>, 256> sub{};
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      sub[static_cast<std::size_t>(r * n + c)] = k(rows[static_cast<std::size_t>(r)], cols[static_cast<std::size_t>(c)]);
  return permanent(sub.data(), n, n) / std::sqrt(norm);
}

std::size_t pick(const std::vector<double>& cum, double u) {
  const double target = u * cum.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), target);
  return std::min(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

}  // namespace

struct TrajectoryCache::Entry {
  RegistryPtr registry;
  std::vector<std::pair<int, double>> steps;  // (mode, transmission)
  std::unique_ptr<LossNode> root;
  std::vector<double> exact;
  std::vector<double> subset;
};

struct TrajectoryCache::Impl {
  const Engine* engine;
  Scratch scratch;
  std::vector<Port> ports;
  std::vector<std::pair<Port, double>> losses;
  std::size_t prefix = 0;
  std::unordered_map<std::string, std::unique_ptr<Entry>> entries;

  void expand(LossNode& node, const std::pair<int, double>& step) const {
    double acc = 0.0;
    for (auto& b : loss_branches(node.state, step.first, step.second)) {
      acc += b.probability;
      node.cum.push_back(acc);
      node.children.push_back(std::make_unique<LossNode>(std::move(b.state)));
    }
  }

  void finish_leaf(LossNode& node) const {
    const auto out = apply_unitaries(node.state, engine->spec().circuit, prefix);
    std::vector<std::pair<OccupationPattern, double>> dist(out.terms().size());
    std::size_t i = 0;
    for (const auto& [p, a] : out.terms()) dist[i++] = {p, std::norm(a)};
    std::sort(dist.begin(), dist.end(), [](const auto& x, const auto& y) { return pattern_less(x.first, y.first); });
    double acc = 0.0;
    const auto& dets = engine->detectors();
    const auto& reg = out.registry();
    for (auto& [p, w] : dist) {
      acc += w;
      node.hit_begin.push_back(static_cast<std::uint32_t>(node.hits.size()));
      for (int m = 0; m < p.size(); ++m) {
        if (p[m] == 0) continue;
        const ModeKey key = reg.key(m);
        for (std::size_t d = 0; d < dets.size(); ++d) {
          if (dets[d].port != key.port) continue;
          const double eta = dets[d].params.efficiency(key.pol);
          for (int k = 0; k < p[m]; ++k) node.hits.emplace_back(static_cast<std::uint8_t>(d), eta);
          break;
        }
      }
      node.patterns.push_back(std::move(p));
      node.cdf.push_back(acc);
    }
    node.hit_begin.push_back(static_cast<std::uint32_t>(node.hits.size()));
    node.leaf_ready = true;
  }

  // Click-mask distribution from the no-click probabilities f(A) = P(no detector in A clicks):
  // P(exactly C) = sum over B within C of (-1)^|C - B| f(complement of B).
  std::vector<double> kernel_masks(const Entry& e) const {
    const auto& reg = *e.registry;
    const int labels = reg.label_count();
    std::vector<std::vector<LabelPattern>> split;  // per term, per label
    std::vector<std::complex<double>> amp;
    std::vector<LabelPattern> distinct;
    for (const auto& [p, a] : e.root->state.terms()) {
      std::vector<LabelPattern> parts(static_cast<std::size_t>(labels), 0);
      for (int m = 0; m < p.size(); ++m) {
        if (p[m] == 0) continue;
        const ModeKey key = reg.key(m);
        const int in = 2 * static_cast<int>(key.port) + (key.pol == Pol::V ? 1 : 0);
        parts[static_cast<std::size_t>(key.label)] += static_cast<LabelPattern>(p[m]) << (4 * in);
      }
      for (auto u : parts) distinct.push_back(u);
      split.push_back(std::move(parts));
      amp.push_back(a);
    }
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    auto index_of = [&](LabelPattern u) {
      return static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), u) - distinct.begin());
    };
    std::vector<std::vector<std::size_t>> idx(split.size());
    for (std::size_t t = 0; t < split.size(); ++t)
      for (auto u : split[t]) idx[t].push_back(index_of(u));
    std::vector<int> n(distinct.size());
    for (std::size_t i = 0; i < distinct.size(); ++i) n[i] = photons(distinct[i]);

    const auto& dets = engine->detectors();
    const std::size_t nd = dets.size();
    const std::size_t full = (std::size_t{1} << nd) - 1;
    const std::size_t s = distinct.size();
    std::vector<double> f(full + 1, 0.0);
    std::vector<std::complex<double>> g(s * s);
    for (std::size_t a = 0; a <= full; ++a) {
      const auto& k = engine->no_click_kernels()[a];
      for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = i; j < s; ++j) {
          const auto v = n[i] == n[j] ? gamma_element(k, distinct[i], distinct[j]) : 0.0;
          g[i * s + j] = v;
          g[j * s + i] = std::conj(v);  // K_A is Hermitian
        }
      std::complex<double> total = 0.0;
      for (std::size_t p = 0; p < split.size(); ++p)
        for (std::size_t q = 0; q < split.size(); ++q) {
          std::complex<double> prod = std::conj(amp[p]) * amp[q];
          for (int l = 0; l < labels && prod != 0.0; ++l)
            prod *= g[idx[p][static_cast<std::size_t>(l)] * s + idx[q][static_cast<std::size_t>(l)]];
          total += prod;
        }
      double dark = 1.0;
      for (std::size_t d = 0; d < nd; ++d)
        if ((a >> d) & 1U) dark *= 1.0 - dets[d].params.dark_prob;
      f[a] = dark * total.real();
    }
    std::vector<double> masks(full + 1, 0.0);
    for (std::size_t cset = 0; cset <= full; ++cset) {
      double acc = 0.0;
      for (std::size_t b = cset;; b = (b - 1) & cset) {
        const double sign = std::popcount(cset & ~b) % 2 ? -1.0 : 1.0;
        acc += sign * f[full & ~b];
        if (b == 0) break;
      }
      masks[cset] = acc < 1e-14 ? 0.0 : acc;
    }
    return masks;
  }

  std::vector<double> exact(LossNode& node, const Entry& e, std::size_t depth) const {
    if (depth == e.steps.size()) {
      if (!node.leaf_ready) finish_leaf(node);
      if (node.masks.empty()) {
        const auto& dets = engine->detectors();
        node.masks.assign(std::size_t{1} << dets.size(), 0.0);
        double prev = 0.0;
        for (std::size_t i = 0; i < node.patterns.size(); ++i) {
          const double w = (node.cdf[i] - prev) / node.cdf.back();
          prev = node.cdf[i];
          const auto m = click_distribution(node.patterns[i], *e.registry, dets);
          for (std::size_t k = 0; k < m.size(); ++k) node.masks[k] += w * m[k];
        }
      }
      return node.masks;
    }
    if (node.children.empty()) expand(node, e.steps[depth]);
    std::vector<double> out(std::size_t{1} << engine->detectors().size(), 0.0);
    double prev = 0.0;
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      const double w = (node.cum[i] - prev) / node.cum.back();
      prev = node.cum[i];
      const auto m = exact(*node.children[i], e, depth + 1);
      for (std::size_t k = 0; k < m.size(); ++k) out[k] += w * m[k];
    }
    return out;
  }
};

TrajectoryCache::TrajectoryCache(const Engine& engine) : impl_(std::make_unique<Impl>()) {
  impl_->engine = &engine;
  const auto& c = engine.spec().circuit;
  impl_->ports = c.ports();
  impl_->prefix = c.lossy_prefix();
  for (std::size_t i = 0; i < impl_->prefix; ++i) {
    const auto* loss = std::get_if<element::Loss>(&c.elements[i]);
    if (loss == nullptr) throw ValidationError("only loss elements may precede the unitary circuit");
    impl_->losses.emplace_back(loss->port, loss->transmission);
  }
}

TrajectoryCache::~TrajectoryCache() = default;
TrajectoryCache::TrajectoryCache(TrajectoryCache&&) noexcept = default;

std::size_t TrajectoryCache::size() const { return impl_->entries.size(); }

TrajectoryCache::Entry& TrajectoryCache::entry(const CanonicalPairs& c) {
  auto& slot = impl_->entries[c.key];
  if (slot) return *slot;
  auto e = std::make_unique<Entry>();
  e->registry = std::make_shared<const ModeRegistry>(impl_->ports, c.label_count);
  auto state = emit_state(c.pairs, e->registry);
  for (const auto& [port, t] : impl_->losses) {
    if (t >= 1.0) continue;
    for (int label = 0; label < c.label_count; ++label)
      for (Pol pol : {Pol::H, Pol::V}) {
        const int m = e->registry->index({port, pol, label});
        if (state.occupied(m)) e->steps.emplace_back(m, t);
      }
  }
  e->root = std::make_unique<LossNode>(std::move(state));
  slot = std::move(e);
  return *slot;
}

ClickPattern TrajectoryCache::sample(Entry& e, Rng& rng) {
  LossNode* node = e.root.get();
  for (const auto& step : e.steps) {
    if (node->children.empty()) impl_->expand(*node, step);
    node = node->children[pick(node->cum, rng.uniform())].get();
  }
  if (!node->leaf_ready) impl_->finish_leaf(*node);
  const std::size_t i = pick(node->cdf, rng.uniform());
  // Same draw order as detect(): photons in mode order, then dark counts.
  ClickPattern out;
  for (std::uint32_t h = node->hit_begin[i]; h < node->hit_begin[i + 1]; ++h)
    if (rng.uniform() < node->hits[h].second) out.mask |= static_cast<std::uint8_t>(1U << node->hits[h].first);
  const auto& dets = impl_->engine->detectors();
  for (std::size_t d = 0; d < dets.size(); ++d)
    if (rng.uniform() < dets[d].params.dark_prob) out.mask |= static_cast<std::uint8_t>(1U << d);
  return out;
}

TrajectoryCache::Scratch& TrajectoryCache::scratch() { return impl_->scratch; }

const std::vector<double>& TrajectoryCache::exact_masks(Entry& e) {
  if (e.exact.empty()) e.exact = impl_->kernel_masks(e);
  return e.exact;
}

std::vector<double> TrajectoryCache::branch_masks(Entry& e) { return impl_->exact(*e.root, e, 0); }

const std::vector<double>& TrajectoryCache::subset_probs(Entry& e) {
  if (e.subset.empty() && !impl_->engine->spec().coincidences.empty()) {
    const auto& m = exact_masks(e);
    for (const auto& c : impl_->engine->spec().coincidences) e.subset.push_back(subset_probability(m, c.now));
  }
  return e.subset;
}

PulseOutcome simulate_pulse(const Engine& engine, TrajectoryCache& cache, std::uint64_t pulse, std::uint64_t key) {
  Rng rng(derive_key(key, pulse));
  const auto& spec = engine.spec();
  const auto& lim = spec.limits;
  PulseOutcome out;

  auto& scratch = cache.scratch();
  auto& e = scratch.emission;
  int n0 = 0, n1 = 0;
  for (;;) {
    n0 = engine.sampler(0).sample(rng, lim.require_both_sources, e[0]);
    n1 = engine.sampler(1).sample(rng, lim.require_both_sources, e[1]);
    const bool over = (lim.max_pairs_per_source > 0 && (n0 > lim.max_pairs_per_source || n1 > lim.max_pairs_per_source)) ||
                      2 * (n0 + n1) > lim.photon_cap;
    if (!over) break;
    if (++out.resampled > 1000000) throw ValidationError("photon cap rejects almost every pulse; lower mu");
  }

  if (n0 + n1 == 0) {
    const auto& dets = engine.detectors();
    for (std::size_t d = 0; d < dets.size(); ++d)
      if (rng.uniform() < dets[d].params.dark_prob) out.clicks.mask |= static_cast<std::uint8_t>(1U << d);
    out.probs = engine.vacuum_probs().data();
    return out;
  }

  auto& pairs = scratch.pairs;
  pairs.clear();
  int fresh = engine.fresh_label_base();
  resolve_pairs(e[0], 0, spec.sources[0], false, 1.0, fresh, rng, pairs);
  resolve_pairs(e[1], 1, spec.sources[1], true, spec.retention, fresh, rng, pairs);
  canonicalize(pairs, scratch.canonical);
  auto& entry = cache.entry(scratch.canonical);
  out.vacuum = false;
  out.clicks = cache.sample(entry, rng);
  out.probs = cache.subset_probs(entry).data();
  return out;
}

Estimate RunTotals::expected_estimate(std::size_t k) const {
  const double s = expected[k];
  const double n = static_cast<double>(pulses);
  const double var = n > 0.0 ? expected_sq[k] - s * s / n : 0.0;
  return {s, std::sqrt(std::max(0.0, var))};
}

namespace {

// Applies dead time and coincidence logic in pulse order.
class Accumulator {
 public:
  Accumulator(const Engine& engine)
      : co_(engine.spec().coincidences), dead_(engine.dead_times()), vacuum_(engine.vacuum_probs()) {
    dead_until_.assign(dead_.size(), -1);
    totals_.counts.assign(co_.size(), 0);
    totals_.expected.assign(co_.size(), 0.0);
    totals_.expected_sq.assign(co_.size(), 0.0);
  }

  void pulse(std::uint64_t index, ClickPattern clicks, const double* probs) {
    const auto i = static_cast<std::int64_t>(index);
    const std::uint8_t prev = last_pulse_ == i - 1 ? last_reg_ : 0;
    std::uint8_t live = 0;
    for (std::size_t d = 0; d < dead_.size(); ++d)
      if (dead_until_[d] < i) live |= static_cast<std::uint8_t>(1U << d);
    const std::uint8_t reg = clicks.mask & live;
    for (std::size_t k = 0; k < co_.size(); ++k) {
      const auto& c = co_[k];
      if ((prev & c.previous) != c.previous) continue;
      if ((reg & c.now) == c.now) ++totals_.counts[k];
      if ((live & c.now) == c.now) {
        totals_.expected[k] += probs[k];
        totals_.expected_sq[k] += probs[k] * probs[k];
      }
    }
    for (std::size_t d = 0; d < dead_.size(); ++d)
      if ((reg >> d) & 1U) dead_until_[d] = i + dead_[d];
    last_pulse_ = i;
    last_reg_ = reg;
  }

  // Pulses [from, to) were empty and produced no clicks.
  void gap(std::uint64_t from, std::uint64_t to) {
    if (to <= from) return;
    const auto f = static_cast<std::int64_t>(from);
    const auto t = static_cast<std::int64_t>(to);
    const std::uint8_t prev = last_pulse_ == f - 1 ? last_reg_ : 0;
    for (std::size_t k = 0; k < co_.size(); ++k) {
      const auto& c = co_[k];
      std::int64_t blind = -1;
      for (std::size_t d = 0; d < dead_.size(); ++d)
        if ((c.now >> d) & 1U) blind = std::max(blind, dead_until_[d]);
      std::int64_t live_pulses = 0;
      if (c.previous != 0) {
        live_pulses = ((prev & c.previous) == c.previous && blind < f) ? 1 : 0;
      } else {
        live_pulses = std::max<std::int64_t>(0, t - std::max(f, blind + 1));
      }
      const double p = vacuum_[k];
      totals_.expected[k] += static_cast<double>(live_pulses) * p;
      totals_.expected_sq[k] += static_cast<double>(live_pulses) * p * p;
    }
    last_pulse_ = t - 1;
    last_reg_ = 0;
  }

  RunTotals finish(std::uint64_t pulses, std::uint64_t resampled) {
    totals_.pulses = pulses;
    totals_.resampled = resampled;
    return std::move(totals_);
  }

 private:
  const std::vector<Coincidence>& co_;
  std::vector<int> dead_;
  const std::vector<double>& vacuum_;
  std::vector<std::int64_t> dead_until_;
  std::int64_t last_pulse_ = -2;
  std::uint8_t last_reg_ = 0;
  RunTotals totals_;
};

struct Record {
  std::uint64_t pulse;
  ClickPattern clicks;
  const double* probs;
};

constexpr std::uint64_t kBlock = 4096;

}  // namespace

RunTotals run_serial(const Engine& engine, std::uint64_t pulses, std::uint64_t key) {
  TrajectoryCache cache(engine);
  Accumulator acc(engine);
  std::uint64_t resampled = 0;
  for (std::uint64_t i = 0; i < pulses; ++i) {
    const auto out = simulate_pulse(engine, cache, i, key);
    resampled += out.resampled;
    acc.pulse(i, out.clicks, out.probs);
  }
  return acc.finish(pulses, resampled);
}

RunTotals run_parallel(const Engine& engine, std::uint64_t pulses, std::uint64_t key, int workers,
                       std::uint64_t chunk) {
  if (workers <= 0) workers = omp_get_max_threads();
  chunk = std::max(chunk, kBlock);
  std::vector<TrajectoryCache> caches;
  caches.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) caches.emplace_back(engine);

  Accumulator acc(engine);
  std::uint64_t resampled = 0;
  std::uint64_t next = 0;  // first pulse not yet flushed
  for (std::uint64_t start = 0; start < pulses; start += chunk) {
    const std::uint64_t end = std::min(pulses, start + chunk);
    const auto blocks = static_cast<std::int64_t>((end - start + kBlock - 1) / kBlock);
    std::vector<std::vector<Record>> records(static_cast<std::size_t>(blocks));
    std::vector<std::uint64_t> block_resampled(static_cast<std::size_t>(blocks), 0);
    std::exception_ptr error;

#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (std::int64_t b = 0; b < blocks; ++b) {
      try {
        auto& cache = caches[static_cast<std::size_t>(omp_get_thread_num())];
        const std::uint64_t lo = start + static_cast<std::uint64_t>(b) * kBlock;
        const std::uint64_t hi = std::min(end, lo + kBlock);
        auto& out = records[static_cast<std::size_t>(b)];
        for (std::uint64_t i = lo; i < hi; ++i) {
          const auto r = simulate_pulse(engine, cache, i, key);
          block_resampled[static_cast<std::size_t>(b)] += r.resampled;
          if (!r.vacuum || r.clicks.mask != 0) out.push_back({i, r.clicks, r.probs});
        }
      } catch (...) {
#pragma omp critical(swapsim_engine_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);

    for (std::size_t b = 0; b < records.size(); ++b) {
      resampled += block_resampled[b];
      for (const auto& r : records[b]) {
        acc.gap(next, r.pulse);
        acc.pulse(r.pulse, r.clicks, r.probs);
        next = r.pulse + 1;
      }
    }
  }
  acc.gap(next, pulses);
  return acc.finish(pulses, resampled);
}

}  // namespace swapsim
