#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "swapsim/detection.h"
#include "swapsim/optics.h"
#include "swapsim/spdc.h"

namespace swapsim {

struct EmissionLimits {
  int photon_cap = 8;
  int max_pairs_per_source = 0;  // 0 = no limit
  // Draw each source conditioned on at least one pair.
  bool require_both_sources = false;

  friend bool operator==(const EmissionLimits&, const EmissionLimits&) = default;
};

// Everything the pulse kernel needs. Filters must already be applied to the
// sources; arm transmissions live in the circuit's leading Loss elements.
struct EngineSpec {
  Circuit circuit;
  std::array<SourceParams, 2> sources;
  std::vector<DetectorParams> detectors;  // one per circuit.detectors entry
  std::vector<Coincidence> coincidences;
  double retention = 1.0;  // label retention on the delayed arm (ch4)
  EmissionLimits limits;
};

class Engine {
 public:
  explicit Engine(EngineSpec spec);

  const EngineSpec& spec() const { return spec_; }
  const std::vector<Detector>& detectors() const { return detectors_; }
  const std::vector<double>& weights(int source) const { return weights_[static_cast<std::size_t>(source)]; }
  const EmissionSampler& sampler(int source) const { return samplers_[static_cast<std::size_t>(source)]; }
  int fresh_label_base() const { return fresh_base_; }
  // Coincidence probabilities of a pulse with no photons (dark counts only).
  const std::vector<double>& vacuum_probs() const { return vacuum_probs_; }
  const std::vector<double>& vacuum_masks() const { return vacuum_masks_; }
  std::vector<int> dead_times() const;

  // Single-photon no-click kernels over the eight source-fibre modes (ch1..ch4
  // x H/V) of one spectral label, one per detector subset A:
  // K_A = I - L^dagger E_A L, with L the lossy circuit transfer matrix and E_A
  // the efficiencies of the detectors in A.
  using Kernel = Eigen::Matrix<std::complex<double>, 8, 8>;
  const std::vector<Kernel>& no_click_kernels() const { return kernels_; }

 private:
  EngineSpec spec_;
  std::vector<Detector> detectors_;
  std::array<std::vector<double>, 2> weights_;
  std::vector<EmissionSampler> samplers_;
  int fresh_base_ = 1;
  std::vector<double> vacuum_probs_;
  std::vector<double> vacuum_masks_;
  std::vector<Kernel> kernels_;
};

// Relabels spectral labels by first appearance so that configurations that
// only differ by label names share one key.
struct CanonicalPairs {
  std::vector<PairSpec> pairs;
  int label_count = 1;
  std::string key;
};

CanonicalPairs canonicalize(std::span<const PairSpec> pairs);
void canonicalize(std::span<const PairSpec> pairs, CanonicalPairs& out);

// Per-worker memo of emitted states, loss branches and measurement
// distributions, keyed by canonical pair configuration. Not thread-safe.
class TrajectoryCache {
 public:
  explicit TrajectoryCache(const Engine& engine);
  ~TrajectoryCache();
  TrajectoryCache(TrajectoryCache&&) noexcept;
  TrajectoryCache& operator=(TrajectoryCache&&) = delete;

  struct Entry;

  Entry& entry(const CanonicalPairs& c);

  // Trajectory route: sample loss branches, one measurement outcome, and the
  // detector response.
  ClickPattern sample(Entry& e, Rng& rng);
  // Exact route: click-mask distribution from the no-click kernels.
  const std::vector<double>& exact_masks(Entry& e);
  // Same distribution by brute force over every loss branch and outcome.
  std::vector<double> branch_masks(Entry& e);
  // exact_masks reduced to each coincidence's `now` mask.
  const std::vector<double>& subset_probs(Entry& e);

  std::size_t size() const;

  // Reusable per-worker buffers for the pulse loop.
  struct Scratch {
    std::array<PairEmission, 2> emission;
    std::vector<PairSpec> pairs;
    CanonicalPairs canonical;
  };
  Scratch& scratch();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct PulseOutcome {
  ClickPattern clicks;
  bool vacuum = true;
  const double* probs = nullptr;  // per coincidence; vacuum_probs() when vacuum
  std::uint32_t resampled = 0;
};

PulseOutcome simulate_pulse(const Engine& engine, TrajectoryCache& cache, std::uint64_t pulse, std::uint64_t key);

struct RunTotals {
  std::uint64_t pulses = 0;
  std::uint64_t resampled = 0;
  std::vector<std::uint64_t> counts;
  std::vector<double> expected;
  std::vector<double> expected_sq;

  // Conditional-expectation estimate of counts[k] and its standard error.
  Estimate expected_estimate(std::size_t k) const;
  friend bool operator==(const RunTotals&, const RunTotals&) = default;
};

// Reference kernel: one pulse at a time, dead time applied inline.
RunTotals run_serial(const Engine& engine, std::uint64_t pulses, std::uint64_t key);

// OpenMP kernel: chunks of pulses are sampled in parallel, then flushed
// serially in pulse order to apply dead time. Output does not depend on the
// worker count.
RunTotals run_parallel(const Engine& engine, std::uint64_t pulses, std::uint64_t key, int workers,
                       std::uint64_t chunk = 1ULL << 16);

}  // namespace swapsim
