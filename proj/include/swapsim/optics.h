#pragma once

#include <array>
#include <optional>
#include <variant>
#include <vector>

#include "swapsim/fock.h"

namespace swapsim {

enum class ElementKind { HWP, QWP, Polarizer, PBS, FBS, FPBS, Delay, Loss };

// Angles are in degrees and only matter modulo 180.
namespace element {
struct Hwp {
  Port port;
  double theta_deg;
};
struct Qwp {
  Port port;
  double theta_deg;
};
// Transmits polarization theta; the orthogonal component goes to `sink`.
struct Polarizer {
  Port port;
  double theta_deg;
  Port sink;
};
// H transmits, V reflects, no reflection phase.
struct Pbs {
  Port in;
  Port transmit;
  Port reflect;
};
// Fibre beam splitter: in_a -> out_a with amplitude sqrt(ratio).
struct Fbs {
  Port in_a, in_b;
  Port out_a, out_b;
  double ratio = 0.5;
};
// Two-input polarizing splitter: H from in_a and V from in_b leave on out_h,
// the other two on out_v.
struct Fpbs {
  Port in_a, in_b;
  Port out_h, out_v;
};
struct Delay {
  Port port;
  double tau_ps;
};
struct Loss {
  Port port;
  double transmission;
};
}  // namespace element

using Element = std::variant<element::Hwp, element::Qwp, element::Polarizer, element::Pbs, element::Fbs,
                             element::Fpbs, element::Delay, element::Loss>;

ElementKind kind_of(const Element& e);
bool is_unitary(const Element& e);

TwoModeUnitary jones_of(ElementKind kind, double theta_deg);

// Rotation taking linear polarization theta onto H.
TwoModeUnitary rotation_to_h(double theta_deg);

enum class SetupKind { SourceTest, HomTeleport, Swap };

struct Circuit {
  SetupKind kind = SetupKind::HomTeleport;
  std::vector<Element> elements;
  std::vector<Port> detectors;

  // Every port referenced by an element or detector, plus the four source fibres.
  std::vector<Port> ports() const;
  double delay_ps() const;
  // Index of the first element that is not a Loss.
  std::size_t lossy_prefix() const;
};

// Unitary elements only; Loss needs an rng and goes through the overload below.
SparseState apply_element(const SparseState& state, const Element& e);
SparseState apply_element(const SparseState& state, const Element& e, Rng& rng);

SparseState apply_circuit(const SparseState& state, const Circuit& c, Rng& rng);
SparseState apply_unitaries(const SparseState& state, const Circuit& c, std::size_t first = 0);

struct SetupSettings {
  // theta1..theta4; nullopt means the polarizer is removed from that arm.
  std::array<std::optional<double>, 4> polarizers{};
  // Loss ahead of everything else on ch1..ch4.
  std::array<double, 4> arm_transmission{1.0, 1.0, 1.0, 1.0};
  double delay_ps = 0.0;
  double splitter_ratio = 0.5;
  int tested_source = 1;  // SourceTest only; 0 puts detectors on all four channels
};

Circuit build_setup(SetupKind kind, const SetupSettings& settings);

}  // namespace swapsim
