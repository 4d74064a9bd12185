#include "swapsim/optics.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace swapsim {

namespace {

double rad(double deg) { return deg * std::numbers::pi / 180.0; }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_port(const SparseState& s, Port p) {
  if (!s.registry().has_port(p)) throw ConfigError("element bound to unregistered port " + to_string(p));
}

// Applies u to (port, H, l), (port, V, l) for every label l that carries photons.
SparseState polarization_op(const SparseState& s, Port port, const TwoModeUnitary& u) {
  require_port(s, port);
  const auto& reg = s.registry();
  SparseState out = s;
  for (int l = 0; l < reg.label_count(); ++l) {
    const int h = reg.index({port, Pol::H, l});
    const int v = reg.index({port, Pol::V, l});
    if (!out.occupied(h) && !out.occupied(v)) continue;
    out = apply_two_mode(out, h, v, u);
  }
  return out;
}

// Applies u between two ports for every (polarization, label).
SparseState spatial_op(const SparseState& s, Port a, Port b, const TwoModeUnitary& u) {
  const auto& reg = s.registry();
  SparseState out = s;
  for (Pol pol : {Pol::H, Pol::V}) {
    for (int l = 0; l < reg.label_count(); ++l) {
      const int ma = reg.index({a, pol, l});
      const int mb = reg.index({b, pol, l});
      if (!out.occupied(ma) && !out.occupied(mb)) continue;
      out = apply_two_mode(out, ma, mb, u);
    }
  }
  return out;
}

using Move = std::pair<int, int>;

void add_move(std::vector<Move>& moves, const ModeRegistry& reg, ModeKey from, ModeKey to) {
  if (from == to) return;
  moves.emplace_back(reg.index(from), reg.index(to));
}

SparseState apply_polarizer(const SparseState& s, const element::Polarizer& p) {
  require_port(s, p.port);
  require_port(s, p.sink);
  const auto& reg = s.registry();
  SparseState out = polarization_op(s, p.port, rotation_to_h(p.theta_deg));
  std::vector<Move> moves;
  for (int l = 0; l < reg.label_count(); ++l) add_move(moves, reg, {p.port, Pol::V, l}, {p.sink, Pol::V, l});
  out = route_modes(out, moves);
  return polarization_op(out, p.port, TwoModeUnitary(rotation_to_h(p.theta_deg).matrix().adjoint()));
}

SparseState apply_pbs(const SparseState& s, const element::Pbs& p) {
  for (Port q : {p.in, p.transmit, p.reflect}) require_port(s, q);
  const auto& reg = s.registry();
  std::vector<Move> moves;
  for (int l = 0; l < reg.label_count(); ++l) {
    add_move(moves, reg, {p.in, Pol::H, l}, {p.transmit, Pol::H, l});
    add_move(moves, reg, {p.in, Pol::V, l}, {p.reflect, Pol::V, l});
  }
  return route_modes(s, moves);
}

SparseState apply_fbs(const SparseState& s, const element::Fbs& f) {
  for (Port q : {f.in_a, f.in_b, f.out_a, f.out_b}) require_port(s, q);
  if (!(f.ratio >= 0.0 && f.ratio <= 1.0)) throw ValidationError("splitter ratio must lie in [0, 1]");
  const auto& reg = s.registry();
  std::vector<Move> moves;
  for (Pol pol : {Pol::H, Pol::V}) {
    for (int l = 0; l < reg.label_count(); ++l) {
      add_move(moves, reg, {f.in_a, pol, l}, {f.out_a, pol, l});
      add_move(moves, reg, {f.in_b, pol, l}, {f.out_b, pol, l});
    }
  }
  SparseState out = route_modes(s, moves);
  const double t = std::sqrt(f.ratio);
  const double r = std::sqrt(1.0 - f.ratio);
  Eigen::Matrix2cd u;
  u << t, r, r, -t;
  return spatial_op(out, f.out_a, f.out_b, TwoModeUnitary(u));
}

SparseState apply_fpbs(const SparseState& s, const element::Fpbs& f) {
  for (Port q : {f.in_a, f.in_b, f.out_h, f.out_v}) require_port(s, q);
  const auto& reg = s.registry();
  std::vector<Move> moves;
  for (int l = 0; l < reg.label_count(); ++l) {
    add_move(moves, reg, {f.in_a, Pol::H, l}, {f.out_h, Pol::H, l});
    add_move(moves, reg, {f.in_a, Pol::V, l}, {f.out_v, Pol::V, l});
    add_move(moves, reg, {f.in_b, Pol::H, l}, {f.out_v, Pol::H, l});
    add_move(moves, reg, {f.in_b, Pol::V, l}, {f.out_h, Pol::V, l});
  }
  return route_modes(s, moves);
}

}  // namespace

ElementKind kind_of(const Element& e) {
  return std::visit(overloaded{
                        [](const element::Hwp&) { return ElementKind::HWP; },
                        [](const element::Qwp&) { return ElementKind::QWP; },
                        [](const element::Polarizer&) { return ElementKind::Polarizer; },
                        [](const element::Pbs&) { return ElementKind::PBS; },
                        [](const element::Fbs&) { return ElementKind::FBS; },
                        [](const element::Fpbs&) { return ElementKind::FPBS; },
                        [](const element::Delay&) { return ElementKind::Delay; },
                        [](const element::Loss&) { return ElementKind::Loss; },
                    },
                    e);
}

bool is_unitary(const Element& e) { return kind_of(e) != ElementKind::Loss; }

TwoModeUnitary jones_of(ElementKind kind, double theta_deg) {
  const double t = rad(theta_deg);
  Eigen::Matrix2cd u;
  switch (kind) {
    case ElementKind::HWP:
      u << std::cos(2 * t), std::sin(2 * t), std::sin(2 * t), -std::cos(2 * t);
      return TwoModeUnitary(u);
    case ElementKind::QWP: {
      const double c = std::cos(t);
      const double s = std::sin(t);
      const std::complex<double> i(0.0, 1.0);
      u << c * c + i * s * s, (1.0 - i) * s * c, (1.0 - i) * s * c, s * s + i * c * c;
      return TwoModeUnitary(u);
    }
    default:
      throw ValidationError("jones_of is defined for wave plates only");
  }
}

TwoModeUnitary rotation_to_h(double theta_deg) {
  const double t = rad(theta_deg);
  Eigen::Matrix2cd u;
  u << std::cos(t), std::sin(t), -std::sin(t), std::cos(t);
  return TwoModeUnitary(u);
}

SparseState apply_element(const SparseState& state, const Element& e) {
  return std::visit(overloaded{
                        [&](const element::Hwp& w) {
                          return polarization_op(state, w.port, jones_of(ElementKind::HWP, w.theta_deg));
                        },
                        [&](const element::Qwp& w) {
                          return polarization_op(state, w.port, jones_of(ElementKind::QWP, w.theta_deg));
                        },
                        [&](const element::Polarizer& p) { return apply_polarizer(state, p); },
                        [&](const element::Pbs& p) { return apply_pbs(state, p); },
                        [&](const element::Fbs& f) { return apply_fbs(state, f); },
                        [&](const element::Fpbs& f) { return apply_fpbs(state, f); },
                        [&](const element::Delay& d) {
                          // Delay acts through spectral labels at emission.
                          require_port(state, d.port);
                          return state;
                        },
                        [&](const element::Loss&) -> SparseState {
                          throw ValidationError("loss element needs a random source");
                        },
                    },
                    e);
}

SparseState apply_element(const SparseState& state, const Element& e, Rng& rng) {
  if (const auto* loss = std::get_if<element::Loss>(&e)) {
    require_port(state, loss->port);
    const auto& reg = state.registry();
    SparseState out = state;
    for (Pol pol : {Pol::H, Pol::V}) {
      for (int l = 0; l < reg.label_count(); ++l) {
        const int m = reg.index({loss->port, pol, l});
        if (!out.occupied(m)) continue;
        out = sample_loss(out, m, loss->transmission, rng).state;
      }
    }
    return out;
  }
  return apply_element(state, e);
}

SparseState apply_circuit(const SparseState& state, const Circuit& c, Rng& rng) {
  SparseState s = state;
  for (const auto& e : c.elements) s = apply_element(s, e, rng);
  return s;
}

SparseState apply_unitaries(const SparseState& state, const Circuit& c, std::size_t first) {
  SparseState s = state;
  for (std::size_t i = first; i < c.elements.size(); ++i) {
    if (!is_unitary(c.elements[i])) throw ValidationError("loss element after the lossy prefix");
    s = apply_element(s, c.elements[i]);
  }
  return s;
}

std::vector<Port> Circuit::ports() const {
  std::vector<Port> out{Port::Ch1, Port::Ch2, Port::Ch3, Port::Ch4};
  auto add = [&](Port p) {
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  };
  for (const auto& e : elements) {
    std::visit(overloaded{
                   [&](const element::Hwp& w) { add(w.port); },
                   [&](const element::Qwp& w) { add(w.port); },
                   [&](const element::Polarizer& p) {
                     add(p.port);
                     add(p.sink);
                   },
                   [&](const element::Pbs& p) {
                     add(p.in);
                     add(p.transmit);
                     add(p.reflect);
                   },
                   [&](const element::Fbs& f) {
                     add(f.in_a);
                     add(f.in_b);
                     add(f.out_a);
                     add(f.out_b);
                   },
                   [&](const element::Fpbs& f) {
                     add(f.in_a);
                     add(f.in_b);
                     add(f.out_h);
                     add(f.out_v);
                   },
                   [&](const element::Delay& d) { add(d.port); },
                   [&](const element::Loss& l) { add(l.port); },
               },
               e);
  }
  for (Port p : detectors) add(p);
  return out;
}

double Circuit::delay_ps() const {
  for (const auto& e : elements)
    if (const auto* d = std::get_if<element::Delay>(&e)) return d->tau_ps;
  return 0.0;
}

std::size_t Circuit::lossy_prefix() const {
  std::size_t i = 0;
  while (i < elements.size() && !is_unitary(elements[i])) ++i;
  return i;
}

Circuit build_setup(SetupKind kind, const SetupSettings& s) {
  static constexpr std::array<Port, 4> arms = {Port::Ch1, Port::Ch2, Port::Ch3, Port::Ch4};
  for (double t : s.arm_transmission)
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("arm transmission must lie in [0, 1]");

  Circuit c;
  c.kind = kind;
  for (std::size_t i = 0; i < 4; ++i)
    if (s.arm_transmission[i] < 1.0) c.elements.push_back(element::Loss{arms[i], s.arm_transmission[i]});

  auto polarizer = [&](std::size_t arm) {
    if (s.polarizers[arm])
      c.elements.push_back(element::Polarizer{arms[arm], *s.polarizers[arm], blocked_port(static_cast<int>(arm))});
  };

  switch (kind) {
    case SetupKind::SourceTest: {
      if (s.tested_source < 0 || s.tested_source > 2) throw ValidationError("tested_source must be 0, 1 or 2");
      if (s.delay_ps != 0.0) throw ValidationError("source test has no delay line");
      if (s.tested_source == 0) {
        for (std::size_t i = 0; i < 4; ++i) polarizer(i);
        c.detectors = {arms[0], arms[1], arms[2], arms[3]};
        break;
      }
      const std::size_t a = s.tested_source == 1 ? 0 : 2;
      polarizer(a);
      polarizer(a + 1);
      c.detectors = {arms[a], arms[a + 1]};
      break;
    }
    case SetupKind::HomTeleport:
      for (std::size_t i = 0; i < 4; ++i) polarizer(i);
      c.elements.push_back(element::Delay{Port::Ch4, s.delay_ps});
      c.elements.push_back(element::Fbs{Port::Ch1, Port::Ch4, Port::P5, Port::P6, s.splitter_ratio});
      c.detectors = {Port::P5, Port::P6, Port::Ch2, Port::Ch3};
      break;
    case SetupKind::Swap:
      if (s.polarizers[0] || s.polarizers[3])
        throw ValidationError("swap setup runs with polarizers 1 and 4 removed");
      polarizer(1);
      polarizer(2);
      // Calibrated analyser: ch4 H<->V, ch1 untouched as reference.
      c.elements.push_back(element::Hwp{Port::Ch4, 45.0});
      c.elements.push_back(element::Delay{Port::Ch4, s.delay_ps});
      c.elements.push_back(element::Fbs{Port::Ch1, Port::Ch4, Port::P5, Port::P6, s.splitter_ratio});
      c.elements.push_back(element::Fpbs{Port::P5, Port::P6, Port::P8, Port::P7});
      c.detectors = {Port::P7, Port::P8, Port::Ch2, Port::Ch3};
      break;
  }
  return c;
}

}  // namespace swapsim
