#include "swapsim/fock.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string_view>

namespace swapsim {

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

Amplitude ipow(Amplitude z, int n) {
  Amplitude r = 1.0;
  for (int i = 0; i < n; ++i) r *= z;
  return r;
}

}  // namespace

std::string to_string(Port p) {
  static constexpr std::array<std::string_view, kPortCount> names = {
      "ch1", "ch2", "ch3", "ch4", "p5", "p6", "p7", "p8", "blk1", "blk2", "blk3", "blk4", "blk5", "blk6"};
  return std::string(names[static_cast<int>(p)]);
}

std::string to_string(Pol p) { return p == Pol::H ? "H" : "V"; }

bool is_blocked(Port p) { return static_cast<int>(p) >= static_cast<int>(Port::Blk1); }

Port blocked_port(int index) {
  if (index < 0 || index >= 6) throw ConfigError("blocked port index out of range");
  return static_cast<Port>(static_cast<int>(Port::Blk1) + index);
}

std::string to_string(const ModeKey& m) {
  return to_string(m.port) + "/" + to_string(m.pol) + "/" + std::to_string(m.label);
}

// ---------------------------------------------------------------- registry

ModeRegistry::ModeRegistry(std::span<const Port> ports, int label_count)
    : ports_(ports.begin(), ports.end()), label_count_(label_count) {
  if (label_count <= 0) throw ValidationError("registry needs at least one spectral label");
  slot_.fill(-1);
  for (std::size_t i = 0; i < ports_.size(); ++i) {
    int& s = slot_[static_cast<int>(ports_[i])];
    if (s >= 0) throw ValidationError("port registered twice: " + to_string(ports_[i]));
    s = static_cast<int>(i);
  }
}

std::optional<int> ModeRegistry::find(const ModeKey& m) const {
  const int s = slot_[static_cast<int>(m.port)];
  if (s < 0 || m.label < 0 || m.label >= label_count_) return std::nullopt;
  return (s * 2 + static_cast<int>(m.pol)) * label_count_ + m.label;
}

int ModeRegistry::index(const ModeKey& m) const {
  auto i = find(m);
  if (!i) throw ConfigError("mode not registered: " + to_string(m));
  return *i;
}

ModeKey ModeRegistry::key(int index) const {
  const int label = index % label_count_;
  const int rest = index / label_count_;
  return {ports_[static_cast<std::size_t>(rest / 2)], static_cast<Pol>(rest % 2), label};
}

// ---------------------------------------------------------------- patterns

int OccupationPattern::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), 0);
}

std::size_t PatternHash::operator()(const OccupationPattern& p) const noexcept {
  auto c = p.counts();
  return std::hash<std::string_view>{}(
      std::string_view(reinterpret_cast<const char*>(c.data()), c.size()));
}

// ---------------------------------------------------------------- unitary

TwoModeUnitary::TwoModeUnitary(const Eigen::Matrix2cd& u) : u_(u) {
  const Eigen::Matrix2cd err = u.adjoint() * u - Eigen::Matrix2cd::Identity();
  if (err.cwiseAbs().maxCoeff() > kUnitarityTol) throw ValidationError("two-mode matrix is not unitary");
}

TwoModeUnitary TwoModeUnitary::balanced_splitter() {
  const double s = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2cd u;
  u << s, s, s, -s;
  return TwoModeUnitary(u);
}

TwoModeUnitary TwoModeUnitary::swap() {
  Eigen::Matrix2cd u;
  u << 0, 1, 1, 0;
  return TwoModeUnitary(u);
}

// ---------------------------------------------------------------- state

SparseState::SparseState(RegistryPtr registry) : registry_(std::move(registry)) {
  if (!registry_) throw ConfigError("state needs a registry");
  terms_.emplace(OccupationPattern(registry_->size()), 1.0);
}

SparseState SparseState::zero(RegistryPtr registry) {
  SparseState s(std::move(registry));
  s.terms_.clear();
  return s;
}

double SparseState::norm_squared() const {
  double s = 0.0;
  for (const auto& [p, a] : terms_) s += std::norm(a);
  return s;
}

void SparseState::normalize() {
  const double n = std::sqrt(norm_squared());
  if (n == 0.0) throw ValidationError("cannot normalize the zero vector");
  for (auto& [p, a] : terms_) a /= n;
}

int SparseState::photon_number() const {
  if (terms_.empty()) throw ValidationError("empty state has no photon number");
  const int n = terms_.begin()->first.total();
  for (const auto& [p, a] : terms_)
    if (p.total() != n) throw ValidationError("state mixes photon numbers");
  return n;
}

bool SparseState::occupied(int mode) const {
  for (const auto& [p, a] : terms_)
    if (p[mode] > 0) return true;
  return false;
}

void SparseState::add(const OccupationPattern& p, Amplitude a) {
  if (p.size() != registry_->size()) throw ValidationError("pattern size does not match registry");
  terms_[p] += a;
}

void SparseState::prune(double tol) {
  std::erase_if(terms_, [tol](const auto& kv) { return std::abs(kv.second) < tol; });
}

void SparseState::create(int mode) {
  if (mode < 0 || mode >= registry_->size()) throw ConfigError("mode index out of range");
  Terms out;
  out.reserve(terms_.size());
  for (const auto& [p, a] : terms_) {
    OccupationPattern q = p;
    const int n = p[mode];
    if (n >= 255) throw ValidationError("mode occupation overflow");
    q.set(mode, n + 1);
    out[q] += a * std::sqrt(static_cast<double>(n + 1));
  }
  terms_ = std::move(out);
}

Amplitude SparseState::amplitude(const OccupationPattern& p) const {
  auto it = terms_.find(p);
  return it == terms_.end() ? Amplitude{} : it->second;
}

// ---------------------------------------------------------------- evolution

SparseState apply_two_mode(const SparseState& state, int a, int b, const TwoModeUnitary& u) {
  const int size = state.registry().size();
  if (a == b) throw ValidationError("two-mode element needs distinct modes");
  if (a < 0 || b < 0 || a >= size || b >= size) throw ConfigError("mode index out of range");

  SparseState::Terms terms;
  terms.reserve(state.size() * 2);
  bool touched = false;
  for (const auto& [p, amp] : state.terms()) {
    const int na = p[a];
    const int nb = p[b];
    if (na == 0 && nb == 0) {
      terms[p] += amp;
      continue;
    }
    touched = true;
    const int n = na + nb;
    // (u00 a' + u10 b')^na (u01 a' + u11 b')^nb / sqrt(na! nb!)
    std::vector<Amplitude> coeff(static_cast<std::size_t>(n + 1), 0.0);
    for (int i = 0; i <= na; ++i) {
      const Amplitude ci = binomial(na, i) * ipow(u(0, 0), i) * ipow(u(1, 0), na - i);
      for (int j = 0; j <= nb; ++j) {
        const Amplitude cj = binomial(nb, j) * ipow(u(0, 1), j) * ipow(u(1, 1), nb - j);
        coeff[static_cast<std::size_t>(i + j)] += ci * cj;
      }
    }
    const double inv = 1.0 / std::sqrt(factorial(na) * factorial(nb));
    OccupationPattern q = p;
    for (int pa = 0; pa <= n; ++pa) {
      const Amplitude c = coeff[static_cast<std::size_t>(pa)];
      if (c == Amplitude{}) continue;
      q.set(a, pa);
      q.set(b, n - pa);
      terms[q] += amp * c * inv * std::sqrt(factorial(pa) * factorial(n - pa));
    }
  }
  if (!touched) return state;
  auto out = SparseState::zero(state.registry_ptr());
  for (auto& [p, c] : terms)
    if (std::abs(c) >= kPruneTol) out.add(p, c);
  return out;
}

SparseState apply_two_mode(const SparseState& state, const ModeKey& a, const ModeKey& b,
                           const TwoModeUnitary& u) {
  return apply_two_mode(state, state.registry().index(a), state.registry().index(b), u);
}

SparseState route_modes(const SparseState& state, std::span<const std::pair<int, int>> moves) {
  const int size = state.registry().size();
  std::vector<char> is_source(static_cast<std::size_t>(size), 0);
  for (auto [s, d] : moves) {
    if (s < 0 || d < 0 || s >= size || d >= size) throw ConfigError("mode index out of range");
    is_source[static_cast<std::size_t>(s)] = 1;
  }
  auto out = SparseState::zero(state.registry_ptr());
  for (const auto& [p, amp] : state.terms()) {
    OccupationPattern q = p;
    for (auto [s, d] : moves) q.set(s, 0);
    for (auto [s, d] : moves) {
      if (p[s] == 0) continue;
      if (!is_source[static_cast<std::size_t>(d)] && p[d] != 0)
        throw ValidationError("routing into an occupied mode");
      q.set(d, q[d] + p[s]);
    }
    out.add(q, amp);
  }
  return out;
}

SparseState tensor(const SparseState& a, const SparseState& b) {
  if (!(a.registry() == b.registry())) throw ValidationError("tensor of states over different registries");
  const int size = a.registry().size();
  for (int m = 0; m < size; ++m)
    if (a.occupied(m) && b.occupied(m)) throw ValidationError("tensor operands share a mode");
  auto out = SparseState::zero(a.registry_ptr());
  for (const auto& [pa, ca] : a.terms()) {
    for (const auto& [pb, cb] : b.terms()) {
      OccupationPattern q = pa;
      for (int m = 0; m < size; ++m)
        if (pb[m]) q.set(m, pb[m]);
      out.add(q, ca * cb);
    }
  }
  return out;
}

std::vector<LossBranch> loss_branches(const SparseState& state, int mode, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("transmission must lie in [0, 1]");
  if (mode < 0 || mode >= state.registry().size()) throw ConfigError("mode index out of range");
  int max_n = 0;
  for (const auto& [p, a] : state.terms()) max_n = std::max(max_n, p[mode]);

  std::vector<LossBranch> out;
  for (int lost = 0; lost <= max_n; ++lost) {
    auto s = SparseState::zero(state.registry_ptr());
    double prob = 0.0;
    for (const auto& [p, a] : state.terms()) {
      const int n = p[mode];
      if (n < lost) continue;
      const double w = binomial(n, lost) * std::pow(t, n - lost) * std::pow(1.0 - t, lost);
      if (w == 0.0) continue;
      OccupationPattern q = p;
      q.set(mode, n - lost);
      s.add(q, a * std::sqrt(w));
      prob += std::norm(a) * w;
    }
    if (prob <= 0.0) continue;
    s.normalize();
    out.push_back({prob, lost, std::move(s)});
  }
  return out;
}

LossSample sample_loss(const SparseState& state, int mode, double t, Rng& rng) {
  auto branches = loss_branches(state, mode, t);
  double total = 0.0;
  for (const auto& b : branches) total += b.probability;
  double u = rng.uniform() * total;
  for (auto& b : branches) {
    if (u < b.probability) return {std::move(b.state), b.lost};
    u -= b.probability;
  }
  return {std::move(branches.back().state), branches.back().lost};
}

LossSample sample_loss(const SparseState& state, const ModeKey& mode, double t, Rng& rng) {
  return sample_loss(state, state.registry().index(mode), t, rng);
}

Distribution measurement_distribution(const SparseState& state) {
  Distribution d;
  d.reserve(state.size());
  for (const auto& [p, a] : state.terms()) {
    const double w = std::norm(a);
    if (w > 0.0) d[p] += w;
  }
  return d;
}

Distribution marginal_distribution(const SparseState& state, std::span<const int> modes) {
  Distribution d;
  for (const auto& [p, a] : state.terms()) {
    OccupationPattern q(static_cast<int>(modes.size()));
    for (std::size_t i = 0; i < modes.size(); ++i) q.set(static_cast<int>(i), p[modes[i]]);
    d[q] += std::norm(a);
  }
  return d;
}

ConditionalState conditional_qubits(const SparseState& state, std::span<const Port> qubit_ports,
                                    const std::function<bool(const OccupationPattern&)>& accept) {
  const auto& reg = state.registry();
  const int labels = reg.label_count();
  const int nq = static_cast<int>(qubit_ports.size());
  const int dim = 1 << nq;

  // Environment key: the pattern with each qubit photon's polarization erased,
  // so photons that differ only in polarization share an environment.
  std::unordered_map<OccupationPattern, Eigen::VectorXcd, PatternHash> groups;
  double accepted = 0.0;
  for (const auto& [p, a] : state.terms()) {
    if (!accept(p)) continue;
    OccupationPattern env = p;
    int basis = 0;
    bool ok = true;
    for (int qi = 0; qi < nq && ok; ++qi) {
      int found = 0;
      Pol pol = Pol::H;
      int label = 0;
      for (Pol pp : {Pol::H, Pol::V}) {
        for (int l = 0; l < labels; ++l) {
          const int m = reg.index({qubit_ports[static_cast<std::size_t>(qi)], pp, l});
          if (p[m] > 0) {
            found += p[m];
            pol = pp;
            label = l;
          }
          env.set(m, 0);
        }
      }
      if (found != 1) {
        ok = false;
        break;
      }
      env.set(reg.index({qubit_ports[static_cast<std::size_t>(qi)], Pol::H, label}), 1);
      basis = basis * 2 + static_cast<int>(pol);
    }
    if (!ok) continue;
    auto [it, inserted] = groups.try_emplace(env, Eigen::VectorXcd::Zero(dim));
    it->second(basis) += a;
    accepted += std::norm(a);
  }

  ConditionalState out{Eigen::MatrixXcd::Zero(dim, dim), accepted};
  for (const auto& [env, v] : groups) out.rho += v * v.adjoint();
  if (accepted > 0.0) out.rho /= out.rho.trace().real();
  return out;
}

}  // namespace swapsim
