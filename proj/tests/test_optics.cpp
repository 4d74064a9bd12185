#include <doctest.h>

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>

#include "swapsim/optics.h"
#include "swapsim/rng.h"

using namespace swapsim;

namespace {

const double kS = 1.0 / std::sqrt(2.0);
constexpr double kDeg = std::numbers::pi / 180.0;

RegistryPtr registry_for(const Circuit& c, int labels = 1) {
  const auto ports = c.ports();
  return std::make_shared<const ModeRegistry>(ports, labels);
}

struct Photon {
  Port port;
  Pol pol;
  int label = 0;
};

OccupationPattern pattern(const ModeRegistry& reg, std::initializer_list<Photon> photons) {
  OccupationPattern p(reg.size());
  for (const auto& ph : photons) {
    const int m = reg.index({ph.port, ph.pol, ph.label});
    p.set(m, p[m] + 1);
  }
  return p;
}

// Pair on ports a/b written in the H/V basis: c_hh|HH> + c_hv|HV> + c_vh|VH> + c_vv|VV>.
SparseState pair(const RegistryPtr& reg, Port a, Port b, std::array<double, 4> c, int label_a = 0, int label_b = 0) {
  auto s = SparseState::zero(reg);
  const Pol pols[2] = {Pol::H, Pol::V};
  for (int i = 0; i < 4; ++i)
    if (c[static_cast<std::size_t>(i)] != 0.0)
      s.add(pattern(*reg, {{a, pols[i >> 1], label_a}, {b, pols[i & 1], label_b}}), c[static_cast<std::size_t>(i)]);
  return s;
}

const std::array<double, 4> kPsiMinus{0.0, kS, -kS, 0.0};
const std::array<double, 4> kPsiPlus{0.0, kS, kS, 0.0};
const std::array<double, 4> kPhiMinus{kS, 0.0, 0.0, -kS};
const std::array<double, 4> kPhiPlus{kS, 0.0, 0.0, kS};

int photons_on(const ModeRegistry& reg, const OccupationPattern& p, Port port) {
  int n = 0;
  for (int m = 0; m < p.size(); ++m)
    if (reg.key(m).port == port) n += p[m];
  return n;
}

// Probability that every listed port holds at least one photon.
double all_occupied(const SparseState& s, std::initializer_list<Port> ports) {
  double total = 0.0;
  for (const auto& [p, w] : measurement_distribution(s)) {
    bool ok = true;
    for (Port port : ports) ok = ok && photons_on(s.registry(), p, port) > 0;
    if (ok) total += w;
  }
  return total;
}

}  // namespace

TEST_CASE("wave plate matrices") {
  const auto h0 = jones_of(ElementKind::HWP, 0.0);
  CHECK(std::abs(h0(0, 0) - 1.0) < 1e-12);
  CHECK(std::abs(h0(1, 1) + 1.0) < 1e-12);
  CHECK(std::abs(h0(0, 1)) < 1e-12);

  const auto h45 = jones_of(ElementKind::HWP, 45.0);
  CHECK(std::abs(h45(0, 1) - 1.0) < 1e-12);
  CHECK(std::abs(h45(1, 0) - 1.0) < 1e-12);
  CHECK(std::abs(h45(0, 0)) < 1e-12);

  // Two quarter-wave plates make a half-wave plate up to a global phase.
  for (double th : {0.0, 17.0, 45.0, 110.0}) {
    const Eigen::Matrix2cd q = jones_of(ElementKind::QWP, th).matrix();
    const Eigen::Matrix2cd qq = q * q;
    const Eigen::Matrix2cd h = jones_of(ElementKind::HWP, th).matrix();
    const std::complex<double> phase =
        std::abs(h(0, 0)) > std::abs(h(0, 1)) ? qq(0, 0) / h(0, 0) : qq(0, 1) / h(0, 1);
    CHECK(std::abs(std::abs(phase) - 1.0) < 1e-12);
    CHECK((qq - phase * h).cwiseAbs().maxCoeff() < 1e-12);
  }

  // Angles only matter modulo 180.
  CHECK((jones_of(ElementKind::HWP, 200.0).matrix() - jones_of(ElementKind::HWP, 20.0).matrix()).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK_THROWS_AS(jones_of(ElementKind::PBS, 0.0), ValidationError);
}

TEST_CASE("polarizing splitter routes H to the transmit port") {
  Circuit c;
  c.elements.push_back(element::Pbs{Port::Ch1, Port::P5, Port::P6});
  auto reg = registry_for(c);
  auto s = SparseState::zero(reg);
  s.add(pattern(*reg, {{Port::Ch1, Pol::H}}), 1.0);
  const auto out = apply_element(s, c.elements[0]);
  CHECK(std::abs(std::abs(out.amplitude(pattern(*reg, {{Port::P5, Pol::H}}))) - 1.0) < 1e-12);

  auto v = SparseState::zero(reg);
  v.add(pattern(*reg, {{Port::Ch1, Pol::V}}), 1.0);
  CHECK(std::abs(std::abs(apply_element(v, c.elements[0]).amplitude(pattern(*reg, {{Port::P6, Pol::V}}))) - 1.0) < 1e-12);
}

TEST_CASE("polarizer sends the orthogonal photon to its sink") {
  const element::Polarizer pol{Port::Ch1, 0.0, Port::Blk1};
  Circuit c;
  c.elements.push_back(pol);
  auto reg = registry_for(c);
  auto s = SparseState::zero(reg);
  s.add(pattern(*reg, {{Port::Ch1, Pol::V}}), 1.0);
  const auto out = apply_element(s, c.elements[0]);
  const auto dist = measurement_distribution(out);
  REQUIRE(dist.size() == 1);
  CHECK(photons_on(*reg, dist.begin()->first, Port::Ch1) == 0);
  CHECK(photons_on(*reg, dist.begin()->first, Port::Blk1) == 1);
}

TEST_CASE("polarizer is idempotent on the detected modes") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const double th = 180.0 * rng.uniform();
    const double in = 180.0 * rng.uniform();
    const Element pol = element::Polarizer{Port::Ch1, th, Port::Blk1};
    Circuit c;
    c.elements.push_back(pol);
    auto reg = registry_for(c);
    auto s = SparseState::zero(reg);
    s.add(pattern(*reg, {{Port::Ch1, Pol::H}}), std::cos(in * kDeg));
    s.add(pattern(*reg, {{Port::Ch1, Pol::V}}), std::sin(in * kDeg));
    const auto once = apply_element(s, pol);
    const auto twice = apply_element(once, pol);
    const int mh = reg->index({Port::Ch1, Pol::H, 0});
    const int mv = reg->index({Port::Ch1, Pol::V, 0});
    const int modes[] = {mh, mv};
    const auto d1 = marginal_distribution(once, modes);
    const auto d2 = marginal_distribution(twice, modes);
    CHECK(d1.size() == d2.size());
    for (const auto& [p, w] : d1) CHECK(std::abs(w - d2.at(p)) < 1e-12);
    // Malus.
    double pass = 0.0;
    for (const auto& [p, w] : d1)
      if (p.total() == 1) pass += w;
    CHECK(pass == doctest::Approx(std::pow(std::cos((in - th) * kDeg), 2)).epsilon(1e-12));
  }
}

TEST_CASE("indistinguishable photons never leave the fibre splitter separately") {
  Circuit c;
  c.elements.push_back(element::Fbs{Port::Ch1, Port::Ch4, Port::P5, Port::P6, 0.5});
  auto reg = registry_for(c, 2);
  auto same = SparseState::zero(reg);
  same.add(pattern(*reg, {{Port::Ch1, Pol::H}, {Port::Ch4, Pol::H}}), 1.0);
  CHECK(all_occupied(apply_unitaries(same, c), {Port::P5, Port::P6}) < 1e-12);

  auto other = SparseState::zero(reg);
  other.add(pattern(*reg, {{Port::Ch1, Pol::H}, {Port::Ch4, Pol::H, 1}}), 1.0);
  CHECK(all_occupied(apply_unitaries(other, c), {Port::P5, Port::P6}) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("setup shapes") {
  SetupSettings st;
  st.polarizers = {0.0, 45.0, std::nullopt, std::nullopt};
  const auto src = build_setup(SetupKind::SourceTest, st);
  CHECK(src.detectors.size() == 2);

  st.tested_source = 0;
  st.polarizers = {};
  CHECK(build_setup(SetupKind::SourceTest, st).detectors.size() == 4);
  st.tested_source = 3;
  CHECK_THROWS_AS(build_setup(SetupKind::SourceTest, st), ValidationError);

  SetupSettings sw;
  sw.polarizers = {0.0, 0.0, 0.0, std::nullopt};
  CHECK_THROWS_AS(build_setup(SetupKind::Swap, sw), ValidationError);
  sw.polarizers = {std::nullopt, 0.0, 0.0, std::nullopt};
  const auto swap = build_setup(SetupKind::Swap, sw);
  CHECK(swap.detectors == std::vector<Port>{Port::P7, Port::P8, Port::Ch2, Port::Ch3});

  SetupSettings lossy;
  lossy.arm_transmission = {0.5, 1.0, 1.0, 0.25};
  const auto hom = build_setup(SetupKind::HomTeleport, lossy);
  CHECK(hom.lossy_prefix() == 2);
  lossy.arm_transmission[0] = 1.5;
  CHECK_THROWS_AS(build_setup(SetupKind::HomTeleport, lossy), ValidationError);
}

TEST_CASE("singlet coincidences follow the relative polarizer angle") {
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    const double t1 = 180.0 * rng.uniform();
    const double t2 = 180.0 * rng.uniform();
    SetupSettings st;
    st.polarizers = {t1, t2, std::nullopt, std::nullopt};
    const auto c = build_setup(SetupKind::SourceTest, st);
    auto reg = registry_for(c);
    const auto out = apply_unitaries(pair(reg, Port::Ch1, Port::Ch2, kPsiMinus), c);
    const double expect = 0.5 * std::pow(std::sin((t1 - t2) * kDeg), 2);
    CHECK(std::abs(all_occupied(out, {Port::Ch1, Port::Ch2}) - expect) < 1e-9);
  }
}

TEST_CASE("only the singlet gives splitter coincidences") {
  const auto c = build_setup(SetupKind::HomTeleport, SetupSettings{});
  auto reg = registry_for(c);
  const std::pair<const char*, std::array<double, 4>> states[] = {
      {"psi-", kPsiMinus}, {"psi+", kPsiPlus}, {"phi-", kPhiMinus}, {"phi+", kPhiPlus}};
  for (const auto& [name, amps] : states) {
    CAPTURE(name);
    const auto out = apply_unitaries(pair(reg, Port::Ch1, Port::Ch4, amps), c);
    const double p = all_occupied(out, {Port::P5, Port::P6});
    // The antisymmetric polarization state always exits on both ports.
    CHECK(std::abs(p - (amps == kPsiMinus ? 1.0 : 0.0)) < 1e-9);
  }
}

TEST_CASE("swap analyser projects ch2/ch3 onto phi+") {
  SetupSettings st;
  const auto c = build_setup(SetupKind::Swap, st);
  st.polarizers = {std::nullopt, 0.0, 0.0, std::nullopt};
  auto reg = registry_for(build_setup(SetupKind::Swap, st));
  const auto in = tensor(pair(reg, Port::Ch1, Port::Ch2, kPsiMinus), pair(reg, Port::Ch3, Port::Ch4, kPsiMinus));
  const auto out = apply_unitaries(in, c);
  const Port qubits[] = {Port::Ch2, Port::Ch3};
  const auto cond = conditional_qubits(out, qubits, [&](const OccupationPattern& p) {
    return photons_on(*reg, p, Port::P7) == 1 && photons_on(*reg, p, Port::P8) == 1;
  });
  REQUIRE(cond.probability > 0.0);
  Eigen::Vector4cd phi;
  phi << kS, 0.0, 0.0, kS;
  const double overlap = std::real((phi.adjoint() * cond.rho * phi)(0, 0));
  CHECK(std::abs(overlap - 1.0) < 1e-9);

  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const double t2 = 180.0 * rng.uniform();
    const double t3 = 180.0 * rng.uniform();
    SetupSettings s2;
    s2.polarizers = {std::nullopt, t2, t3, std::nullopt};
    const auto c2 = build_setup(SetupKind::Swap, s2);
    const auto o2 = apply_unitaries(in, c2);
    const double herald = all_occupied(o2, {Port::P7, Port::P8});
    const double four = all_occupied(o2, {Port::P7, Port::P8, Port::Ch2, Port::Ch3});
    CHECK(std::abs(four / herald - 0.5 * std::pow(std::cos((t2 - t3) * kDeg), 2)) < 1e-9);
  }
}

TEST_CASE("crossed teleport polarizers show no dip") {
  auto four = [](double t2, double t3, int label) {
    SetupSettings st;
    st.polarizers = {std::nullopt, t2, t3, std::nullopt};
    const auto c = build_setup(SetupKind::HomTeleport, st);
    auto reg = registry_for(c, 2);
    const auto in = tensor(pair(reg, Port::Ch1, Port::Ch2, kPsiMinus),
                           pair(reg, Port::Ch3, Port::Ch4, kPsiMinus, label, label));
    return all_occupied(apply_unitaries(in, c), {Port::P5, Port::P6, Port::Ch2, Port::Ch3});
  };
  CHECK(std::abs(four(90.0, 0.0, 0) - four(90.0, 0.0, 1)) < 1e-12);
  CHECK(four(90.0, 0.0, 1) > 0.01);
  CHECK(four(90.0, 90.0, 0) < 1e-12);
  CHECK(four(90.0, 90.0, 1) > 0.01);
}
