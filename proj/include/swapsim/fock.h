#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "swapsim/rng.h"

namespace swapsim {

// Raised when a circuit or state refers to something that was never set up
// (unregistered mode, unbound port).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a value violates a documented constraint.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kUnitarityTol = 1e-12;
inline constexpr double kNormTol = 1e-9;
inline constexpr double kPruneTol = 1e-12;

// Spatial ports. Ch1..Ch4 are the source fibres, P5..P8 the internal ports of
// the Bell-state analysers, Blk* the absorbing sinks behind polarizers.
enum class Port : std::uint8_t { Ch1, Ch2, Ch3, Ch4, P5, P6, P7, P8, Blk1, Blk2, Blk3, Blk4, Blk5, Blk6 };
inline constexpr int kPortCount = 14;

enum class Pol : std::uint8_t { H, V };

std::string to_string(Port p);
std::string to_string(Pol p);
bool is_blocked(Port p);
Port blocked_port(int index);  // index in [0, 6)

struct ModeKey {
  Port port = Port::Ch1;
  Pol pol = Pol::H;
  int label = 0;

  friend bool operator==(const ModeKey&, const ModeKey&) = default;
};

std::string to_string(const ModeKey& m);

// Dense index for every (port, polarization, spectral label) in use.
class ModeRegistry {
 public:
  ModeRegistry(std::span<const Port> ports, int label_count);

  int size() const { return static_cast<int>(ports_.size()) * 2 * label_count_; }
  int label_count() const { return label_count_; }
  std::span<const Port> ports() const { return ports_; }
  bool has_port(Port p) const { return slot_[static_cast<int>(p)] >= 0; }

  std::optional<int> find(const ModeKey& m) const;
  // Throws ConfigError if the mode is not registered.
  int index(const ModeKey& m) const;
  ModeKey key(int index) const;

  friend bool operator==(const ModeRegistry& a, const ModeRegistry& b) {
    return a.ports_ == b.ports_ && a.label_count_ == b.label_count_;
  }

 private:
  std::vector<Port> ports_;
  std::array<int, kPortCount> slot_{};
  int label_count_;
};

using RegistryPtr = std::shared_ptr<const ModeRegistry>;

// Photon counts per registered mode.
class OccupationPattern {
 public:
  OccupationPattern() = default;
  explicit OccupationPattern(int modes) : counts_(static_cast<std::size_t>(modes), 0) {}
  explicit OccupationPattern(std::vector<std::uint8_t> counts) : counts_(std::move(counts)) {}

  int size() const { return static_cast<int>(counts_.size()); }
  int operator[](int mode) const { return counts_[static_cast<std::size_t>(mode)]; }
  void set(int mode, int n) { counts_[static_cast<std::size_t>(mode)] = static_cast<std::uint8_t>(n); }
  int total() const;
  std::span<const std::uint8_t> counts() const { return counts_; }

  friend bool operator==(const OccupationPattern&, const OccupationPattern&) = default;

 private:
  std::vector<std::uint8_t> counts_;
};

struct PatternHash {
  std::size_t operator()(const OccupationPattern& p) const noexcept;
};

using Amplitude = std::complex<double>;

// 2x2 single-excitation transfer matrix between two modes. Column j holds the
// image of mode j's creation operator.
class TwoModeUnitary {
 public:
  explicit TwoModeUnitary(const Eigen::Matrix2cd& u);

  static TwoModeUnitary balanced_splitter();
  static TwoModeUnitary swap();

  const Eigen::Matrix2cd& matrix() const { return u_; }
  Amplitude operator()(int r, int c) const { return u_(r, c); }

 private:
  Eigen::Matrix2cd u_;
};

// Normalized superposition of occupation patterns over a fixed registry.
class SparseState {
 public:
  using Terms = std::unordered_map<OccupationPattern, Amplitude, PatternHash>;

  explicit SparseState(RegistryPtr registry);  // vacuum
  // No terms at all; build up with add().
  static SparseState zero(RegistryPtr registry);

  const ModeRegistry& registry() const { return *registry_; }
  const RegistryPtr& registry_ptr() const { return registry_; }
  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  double norm_squared() const;
  void normalize();
  // Throws ValidationError if terms carry different photon numbers.
  int photon_number() const;
  bool occupied(int mode) const;

  void add(const OccupationPattern& p, Amplitude a);
  void prune(double tol = kPruneTol);

  // a-dagger on one mode (unnormalized).
  void create(int mode);
  void create(const ModeKey& m) { create(registry_->index(m)); }

  Amplitude amplitude(const OccupationPattern& p) const;

 private:
  RegistryPtr registry_;
  Terms terms_;
};

SparseState apply_two_mode(const SparseState& state, int a, int b, const TwoModeUnitary& u);
SparseState apply_two_mode(const SparseState& state, const ModeKey& a, const ModeKey& b,
                           const TwoModeUnitary& u);

// Moves each source mode's photons to its destination; destinations outside the
// source set must be empty. Equivalent to a permutation unitary.
SparseState route_modes(const SparseState& state, std::span<const std::pair<int, int>> moves);

SparseState tensor(const SparseState& a, const SparseState& b);

struct LossBranch {
  double probability = 0.0;
  int lost = 0;
  SparseState state;
};

// All Kraus branches of a pure-loss channel with transmission t on one mode,
// each normalized; branches of zero probability are dropped.
std::vector<LossBranch> loss_branches(const SparseState& state, int mode, double t);

struct LossSample {
  SparseState state;
  int lost = 0;
};

LossSample sample_loss(const SparseState& state, int mode, double t, Rng& rng);
LossSample sample_loss(const SparseState& state, const ModeKey& mode, double t, Rng& rng);

using Distribution = std::unordered_map<OccupationPattern, double, PatternHash>;

Distribution measurement_distribution(const SparseState& state);

// Marginal over the listed modes only; other modes are traced out.
Distribution marginal_distribution(const SparseState& state, std::span<const int> modes);

// Reduced density matrix of a set of polarization qubits (one photon per
// listed port, basis order H,V with the first port most significant),
// conditioned on `accept` for the full pattern. Terms whose qubit ports do
// not hold exactly one photon are discarded. Returns the normalized matrix and
// the acceptance probability.
struct ConditionalState {
  Eigen::MatrixXcd rho;
  double probability = 0.0;
};

ConditionalState conditional_qubits(const SparseState& state, std::span<const Port> qubit_ports,
                                    const std::function<bool(const OccupationPattern&)>& accept);

}  // namespace swapsim
