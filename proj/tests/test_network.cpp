#include <cmath>
#include <numbers>

#include <doctest.h>

#include "lfac/errors.hpp"
#include "lfac/network.hpp"
#include "lfac/poly_fit.hpp"
#include "support.hpp"

using namespace lfac;
using std::numbers::pi;

namespace {

const double kW60 = 2 * pi * 60;

// Two buses at 230 kV in one fixed 60 Hz subnetwork joined by `kind`.
Network two_bus(BranchKind kind, FrequencyMode mode = FrequencyMode::Fixed) {
  Network net;
  net.name = "t";
  Subnetwork sn;
  sn.id = "s";
  sn.mode = mode;
  if (mode == FrequencyMode::Dc) sn.frequency_hz = 0.0;
  net.subnetworks = {sn};
  Bus a, b;
  a.id = "1", b.id = "2";
  a.base_kv = b.base_kv = 230.0;
  a.is_reference = true;
  net.buses = {a, b};
  Branch br;
  br.id = "B12";
  br.from = 0, br.to = 1;
  br.kind = kind;
  br.angle_limit = pi / 4;
  net.branches = {br};
  return net;
}

PolyCableModel fitted_230kv() {
  return fit(sample_reference(test::design_230kv(), 0.001, 120 * pi, 500));
}

CableBranch cable_branch(const PolyCableModel& m) { return CableBranch{m, "d", 135.0}; }

}  // namespace

TEST_CASE("lossless overhead line") {
  const Network net = two_bus(OverheadLine{0.0, 0.1, 0.0});
  for (double w : {kW60, 2 * pi * 10, 2 * pi * 0.1}) {
    const BranchAdmittance a = branch_admittance(net, net.branches[0], w);
    const double L = 0.1 / kW60;
    CHECK(a.G == 0.0);
    CHECK(test::rel_err(a.B, -1.0 / (w * L)) < 1e-14);
    CHECK(a.G_sh == 0.0);
    CHECK(a.B_sh == 0.0);
  }
}

TEST_CASE("overhead line with losses and charging") {
  const OverheadLine l{0.01, 0.1, 0.2};
  const Network net = two_bus(l);
  const double w = 2 * pi * 20;
  const BranchAdmittance a = branch_admittance(net, net.branches[0], w);
  const cd y = 1.0 / cd(l.r, l.x * w / kW60);
  CHECK(test::rel_err(cd(a.G, a.B), y) < 1e-14);
  CHECK(test::rel_err(a.B_sh, 0.5 * l.b * w / kW60) < 1e-14);
}

TEST_CASE("dc mode") {
  SUBCASE("overhead line") {
    const Network net = two_bus(OverheadLine{0.02, 0.1, 0.3}, FrequencyMode::Dc);
    const BranchAdmittance a = branch_admittance(net, net.branches[0], 0.0, true);
    CHECK(a.G == 1.0 / 0.02);
    CHECK(a.B == 0.0);
    CHECK(a.G_sh == 0.0);
    CHECK(a.B_sh == 0.0);
  }
  SUBCASE("cable") {
    const PolyCableModel m = fitted_230kv();
    const Network net = two_bus(cable_branch(m), FrequencyMode::Dc);
    const BranchAdmittance a = branch_admittance(net, net.branches[0], 0.0, true);
    const double zb = impedance_base(230.0, 100.0);
    CHECK(test::rel_err(a.G, zb / m.r0) < 1e-14);
    CHECK(a.B == 0.0);
    CHECK(test::rel_err(a.G_sh, 0.5 * m.g0 * zb) < 1e-14);
    CHECK(a.B_sh == 0.0);
  }
  SUBCASE("lossless branch is refused") {
    const Network net = two_bus(OverheadLine{0.0, 0.1, 0.0}, FrequencyMode::Dc);
    CHECK_THROWS_AS(branch_admittance(net, net.branches[0], 0.0, true), InvalidInput);
    CHECK_THROWS_AS(net.validate(), ParseError);
  }
}

TEST_CASE("cable admittance matches the exact Pi within the fit-error envelope") {
  const CableDesign d = test::design_230kv();
  const auto samples = sample_reference(d, 0.001, 120 * pi, 500);
  const PolyCableModel m = fit(samples);
  const FitReport rep = fit_report(m, samples);
  Network net = two_bus(cable_branch(m), FrequencyMode::Variable);
  const BranchAdmittance a = branch_admittance(net, net.branches[0], kW60);
  const double zb = impedance_base(230.0, 100.0);
  const cd z_ohm = zb / cd(a.G, a.B);
  const PiModel exact = exact_pi(d, kW60);
  const double slack = 1 + 1e-9;
  CHECK(std::abs(z_ohm.real() - exact.z_series.real()) <= std::abs(rep.row(FitParameter::R).largest_error) * slack);
  CHECK(std::abs(z_ohm.imag() - exact.z_series.imag()) <= std::abs(rep.row(FitParameter::X).largest_error) * slack);
  CHECK(std::abs(2 * a.G_sh / zb - exact.y_shunt().real()) <=
        std::abs(rep.row(FitParameter::G).largest_error) * slack);
  CHECK(std::abs(2 * a.B_sh / zb - exact.y_shunt().imag()) <=
        std::abs(rep.row(FitParameter::B).largest_error) * slack);
}

TEST_CASE("cable evaluation outside the fitted range is refused") {
  PolyCableModel m = fitted_230kv();
  const Network net = two_bus(cable_branch(m), FrequencyMode::Variable);
  CHECK_THROWS_AS(branch_admittance(net, net.branches[0], 2 * pi * 61), InvalidInput);
  CHECK_NOTHROW(branch_admittance(net, net.branches[0], 120 * pi));
}

TEST_CASE("admittance derivatives match central differences") {
  const PolyCableModel m = fitted_230kv();
  const Network cable = two_bus(cable_branch(m), FrequencyMode::Variable);
  const Network line = two_bus(OverheadLine{0.01, 0.1, 0.2}, FrequencyMode::Variable);
  for (const Network* net : {&cable, &line})
    for (double w : {2.0, 40.0, 150.0, 370.0}) {
      CAPTURE(w);
      const Branch& br = net->branches[0];
      const double h = 1e-4 * w;
      const auto d = branch_admittance_derivatives(*net, br, w);
      const auto p = branch_admittance_derivatives(*net, br, w + h);
      const auto q = branch_admittance_derivatives(*net, br, w - h);
      auto fd = [&](auto get, const BranchAdmittance& plus, const BranchAdmittance& minus) {
        return (get(plus) - get(minus)) / (2 * h);
      };
      auto close = [](double a, double b, double scale) { return std::abs(a - b) <= 1e-6 * scale; };
      const auto G = [](const BranchAdmittance& a) { return a.G; };
      const auto B = [](const BranchAdmittance& a) { return a.B; };
      const auto Gs = [](const BranchAdmittance& a) { return a.G_sh; };
      const auto Bs = [](const BranchAdmittance& a) { return a.B_sh; };
      const double sy = std::hypot(d.d1.G, d.d1.B), sy2 = std::hypot(d.d2.G, d.d2.B);
      CHECK(close(d.d1.G, fd(G, p.value, q.value), sy));
      CHECK(close(d.d1.B, fd(B, p.value, q.value), sy));
      CHECK(close(d.d2.G, fd(G, p.d1, q.d1), sy2));
      CHECK(close(d.d2.B, fd(B, p.d1, q.d1), sy2));
      const double ss = std::hypot(d.d1.G_sh, d.d1.B_sh), ss2 = std::hypot(d.d2.G_sh, d.d2.B_sh);
      CHECK(close(d.d1.G_sh, fd(Gs, p.value, q.value), ss));
      CHECK(close(d.d1.B_sh, fd(Bs, p.value, q.value), ss));
      CHECK(close(d.d2.G_sh, fd(Gs, p.d1, q.d1), ss2 + 1e-30));
      CHECK(close(d.d2.B_sh, fd(Bs, p.d1, q.d1), ss2 + 1e-30));
    }
}

TEST_CASE("bus shunt susceptance") {
  Network net = two_bus(OverheadLine{0.0, 0.1, 0.0});
  Bus bus = net.buses[0];
  SUBCASE("none") {
    CHECK(bus_shunt_susceptance(net, bus, kW60) == 0.0);
    CHECK(bus_shunt_susceptance(net, bus, 0.0, true) == 0.0);
  }
  SUBCASE("capacitor scales linearly with frequency") {
    bus.shunt = {ShuntElement::Kind::Capacitor, 0.3};
    const double b1 = bus_shunt_susceptance(net, bus, 2 * pi * 20);
    const double b2 = bus_shunt_susceptance(net, bus, 2 * pi * 40);
    CHECK(test::rel_err(b2, 2 * b1) < 1e-15);
    CHECK(test::rel_err(bus_shunt_susceptance(net, bus, kW60), 0.3) < 1e-15);
    CHECK(bus_shunt_susceptance(net, bus, 0.0, true) == 0.0);
  }
  SUBCASE("inductor with 1 pu reactance at the nominal frequency") {
    bus.shunt = {ShuntElement::Kind::Inductor, 1.0};
    // L = 1 / (2 pi 60) pu-seconds; B = -1 / (omega L).
    CHECK(test::rel_err(bus_shunt_susceptance(net, bus, kW60), -1.0) < 1e-15);
    CHECK(test::rel_err(bus_shunt_susceptance(net, bus, 2 * pi * 30), -2.0) < 1e-15);
    CHECK_THROWS_AS(bus_shunt_susceptance(net, bus, 0.0, true), InvalidInput);
    const auto [d1, d2] = bus_shunt_susceptance_derivatives(net, bus, 2 * pi * 30);
    const double h = 1e-4;
    const double w = 2 * pi * 30;
    const double fd1 = (bus_shunt_susceptance(net, bus, w + h) - bus_shunt_susceptance(net, bus, w - h)) / (2 * h);
    CHECK(test::rel_err(d1, fd1) < 1e-7);
    CHECK(test::rel_err(d2, -2.0 * d1 / w) < 1e-14);
  }
}

TEST_CASE("per-unit round trip") {
  for (double kv : {13.8, 138.0, 230.0, 500.0})
    for (double mva : {1.0, 100.0, 1000.0})
      for (double ohm : {1e-4, 0.37, 12.5, 9.9e3}) {
        CHECK(test::rel_err(pu_to_ohm(ohm_to_pu(ohm, kv, mva), kv, mva), ohm) < 1e-12);
        CHECK(test::rel_err(pu_to_siemens(siemens_to_pu(ohm * 1e-6, kv, mva), kv, mva), ohm * 1e-6) < 1e-12);
      }
  CHECK(impedance_base(230.0, 100.0) == 529.0);
}

TEST_CASE("directed edges come in reversed pairs") {
  Network net = two_bus(OverheadLine{0.0, 0.1, 0.0});
  Branch extra = net.branches[0];
  extra.id = "B21";
  std::swap(extra.from, extra.to);
  net.branches.push_back(extra);
  const auto edges = directed_edges(net);
  REQUIRE(edges.size() == 4);
  for (std::size_t k = 0; k < edges.size(); k += 2) {
    CHECK(edges[k].branch == edges[k + 1].branch);
    CHECK(edges[k].forward);
    CHECK_FALSE(edges[k + 1].forward);
    CHECK(edges[k].origin == edges[k + 1].target);
    CHECK(edges[k].target == edges[k + 1].origin);
    CHECK(edges[k].origin == net.branches[edges[k].branch].from);
  }
}

TEST_CASE("generator cost evaluation") {
  GeneratorCost poly;
  poly.c2 = 2, poly.c1 = 3, poly.c0 = 1;
  CHECK(poly.value(2.0) == 15.0);
  GeneratorCost pwl;
  pwl.kind = GeneratorCost::Kind::PiecewiseLinear;
  pwl.points = {{0.0, 0.0}, {1.0, 10.0}, {2.0, 30.0}};
  CHECK(pwl.value(0.5) == 5.0);
  CHECK(pwl.value(1.5) == 20.0);
  CHECK(pwl.value(3.0) == 50.0);
  CHECK(pwl.value(-1.0) == -10.0);
}

TEST_CASE("structural validation") {
  // Two subnetworks linked by a converter.
  Network base = two_bus(OverheadLine{0.01, 0.1, 0.0});
  Subnetwork low;
  low.id = "low";
  low.mode = FrequencyMode::Variable;
  base.subnetworks.push_back(low);
  Bus c, d;
  c.id = "3", d.id = "4";
  c.base_kv = d.base_kv = 230.0;
  c.subnetwork = d.subnetwork = 1;
  c.is_reference = true;
  base.buses.push_back(c);
  base.buses.push_back(d);
  Branch br = base.branches[0];
  br.id = "B34";
  br.from = 2, br.to = 3;
  base.branches.push_back(br);
  Converter cv;
  cv.id = "K";
  cv.bus_i = 1, cv.bus_j = 2;
  base.converters = {cv};
  CHECK_NOTHROW(base.validate());

  auto rejects = [&](auto mutate, const char* needle) {
    Network n = base;
    mutate(n);
    try {
      n.validate();
      FAIL("accepted: " << needle);
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  rejects([](Network& n) { n.converters[0].bus_j = 0; }, "share a subnetwork");
  rejects([](Network& n) { n.converters.clear(); }, "not connected");
  rejects([](Network& n) { n.buses[2].is_reference = false; }, "no reference bus");
  rejects([](Network& n) { n.buses[1].subnetwork = 5; }, "not assigned");
  rejects([](Network& n) { n.branches[1].to = 1; }, "different subnetworks");
  rejects([](Network& n) { n.branches[1].kind = Transformer{0.0, 0.1, 0.0, 1.0, 0.0}; }, "standard-frequency");
  rejects([](Network& n) { n.branches[0].id = "B34"; }, "duplicate id");
  rejects([](Network& n) { n.branches[0].to = 0; }, "same");
  rejects([](Network& n) { n.branches[0].thermal_limit = 0.0; }, "thermal limit");
  rejects([](Network& n) { n.subnetworks[1].max_hz = 90.0; }, "variable frequency bounds");
  rejects(
      [](Network& n) {
        n.subnetworks[1].mode = FrequencyMode::Dc;
        n.buses[3].shunt = {ShuntElement::Kind::Inductor, 1.0};
      },
      "inductive shunt");
  rejects(
      [](Network& n) {
        Generator g;
        g.id = "G";
        g.p_max = 1.0;
        g.cost.kind = GeneratorCost::Kind::PiecewiseLinear;
        g.cost.points = {{0.0, 0.0}, {1.0, 10.0}, {2.0, 15.0}};
        n.generators = {g};
      },
      "not convex");
  rejects(
      [](Network& n) {
        PolyCableModel m;
        m.r0 = 1.0, m.x1 = 0.1;
        m.n_samples = 10, m.omega_min = 1.0, m.omega_max = 100.0;
        n.branches[1].kind = CableBranch{m, "", 1.0};
      },
      "fitted range");
}
