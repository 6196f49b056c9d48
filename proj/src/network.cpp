#include "lfac/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "lfac/errors.hpp"

namespace lfac {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxVariableHz = 60.0;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ParseError(where + ": " + what); }

std::string where(const char* section, std::size_t index, const std::string& id) {
  std::ostringstream s;
  s << section << "[" << index << "]";
  if (!id.empty()) s << " (id '" << id << "')";
  return s.str();
}

// Per-unit series and per-terminal shunt data of a branch as polynomials in
// omega, with derivatives. Overhead lines and transformers carry constant L
// and C derived from their nominal-frequency reactance and susceptance.
struct SeriesShunt {
  std::complex<double> z, dz, d2z;  // series impedance, pu
  double g_sh = 0, dg_sh = 0, d2g_sh = 0;
  double b_sh = 0, db_sh = 0, d2b_sh = 0;
};

SeriesShunt series_shunt(const Network& net, const Branch& br, double omega) {
  SeriesShunt s;
  const double w_nom = net.nominal_omega();
  auto constant_rlc = [&](double r, double x, double b) {
    const double L = x / w_nom, C = b / w_nom;
    s.z = {r, omega * L};
    s.dz = {0.0, L};
    s.b_sh = 0.5 * omega * C;
    s.db_sh = 0.5 * C;
  };
  std::visit(Overloaded{
                 [&](const OverheadLine& l) { constant_rlc(l.r, l.x, l.b); },
                 [&](const Transformer& t) { constant_rlc(t.r, t.x, t.b); },
                 [&](const CableBranch& c) {
                   const double zb = impedance_base(net.buses[br.from].base_kv, net.base_mva);
                   const PolyCableModel& m = c.model;
                   s.z = std::complex<double>(m.R(omega), m.X(omega)) / zb;
                   s.dz = std::complex<double>(m.dR(omega), m.dX(omega)) / zb;
                   s.d2z = std::complex<double>(m.d2R(omega), m.d2X(omega)) / zb;
                   s.g_sh = 0.5 * m.G(omega) * zb;
                   s.dg_sh = 0.5 * m.dG(omega) * zb;
                   s.d2g_sh = 0.5 * m.d2G(omega) * zb;
                   s.b_sh = 0.5 * m.B(omega) * zb;
                   s.db_sh = 0.5 * m.dB(omega) * zb;
                   s.d2b_sh = 0.5 * m.d2B(omega) * zb;
                 },
             },
             br.kind);
  return s;
}

void check_fitted_range(const Branch& br, double omega) {
  const auto* c = std::get_if<CableBranch>(&br.kind);
  if (!c) return;
  const double lo = c->model.omega_min, hi = c->model.omega_max;
  const double slack = 1e-9 * std::max(1.0, hi);
  if (omega < lo - slack || omega > hi + slack) {
    std::ostringstream msg;
    msg << "branch '" << br.id << "': omega = " << omega << " rad/s outside the fitted range [" << lo << ", " << hi
        << "]";
    throw InvalidInput(msg.str());
  }
}

BranchAdmittance dc_admittance(const Network& net, const Branch& br) {
  double r = 0.0, g0 = 0.0;
  std::visit(Overloaded{
                 [&](const OverheadLine& l) { r = l.r; },
                 [&](const Transformer& t) { r = t.r; },
                 [&](const CableBranch& c) {
                   const double zb = impedance_base(net.buses[br.from].base_kv, net.base_mva);
                   r = c.model.r0 / zb;
                   g0 = 0.5 * c.model.g0 * zb;
                 },
             },
             br.kind);
  if (!(r > 0.0)) throw InvalidInput("branch '" + br.id + "': zero resistance in a dc subnetwork");
  return {1.0 / r, 0.0, g0, 0.0};
}

}  // namespace

const char* to_string(FrequencyMode m) {
  switch (m) {
    case FrequencyMode::Fixed: return "fixed";
    case FrequencyMode::Variable: return "variable";
    case FrequencyMode::Dc: return "dc";
  }
  return "?";
}

double Subnetwork::omega() const { return mode == FrequencyMode::Dc ? 0.0 : kTwoPi * frequency_hz; }
double Subnetwork::omega_min() const {
  switch (mode) {
    case FrequencyMode::Fixed: return omega();
    case FrequencyMode::Variable: return kTwoPi * min_hz;
    case FrequencyMode::Dc: return 0.0;
  }
  return 0.0;
}
double Subnetwork::omega_max() const {
  switch (mode) {
    case FrequencyMode::Fixed: return omega();
    case FrequencyMode::Variable: return kTwoPi * max_hz;
    case FrequencyMode::Dc: return 0.0;
  }
  return 0.0;
}

double GeneratorCost::value(double p) const {
  if (kind == Kind::Polynomial) return (c2 * p + c1) * p + c0;
  if (points.empty()) return 0.0;
  if (points.size() == 1) return points.front().second;
  // Linear extrapolation beyond the end segments.
  std::size_t k = 1;
  while (k + 1 < points.size() && p > points[k].first) ++k;
  const auto [p0, f0] = points[k - 1];
  const auto [p1, f1] = points[k];
  return f0 + (f1 - f0) / (p1 - p0) * (p - p0);
}

double Network::nominal_omega() const { return kTwoPi * nominal_hz; }

std::vector<int> Network::members(int subnetwork) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(buses.size()); ++i)
    if (buses[i].subnetwork == subnetwork) out.push_back(i);
  return out;
}

void Network::validate() const {
  if (!(base_mva > 0.0) || !std::isfinite(base_mva)) fail("base_mva", "must be positive and finite");
  if (!(nominal_hz > 0.0) || !std::isfinite(nominal_hz)) fail("nominal_frequency_hz", "must be positive and finite");
  if (subnetworks.empty()) fail("subnetworks", "at least one subnetwork is required");
  if (buses.empty()) fail("buses", "at least one bus is required");

  const int nb = static_cast<int>(buses.size());
  const int ns = static_cast<int>(subnetworks.size());
  auto bus_ok = [&](int b) { return b >= 0 && b < nb; };

  std::set<std::string> ids;
  for (std::size_t s = 0; s < subnetworks.size(); ++s) {
    const Subnetwork& sn = subnetworks[s];
    const std::string loc = where("subnetworks", s, sn.id);
    if (sn.id.empty()) fail(loc, "missing id");
    if (!ids.insert(sn.id).second) fail(loc, "duplicate id");
    switch (sn.mode) {
      case FrequencyMode::Fixed:
        if (!(sn.frequency_hz > 0.0) || !std::isfinite(sn.frequency_hz)) fail(loc, "fixed frequency must be positive");
        break;
      case FrequencyMode::Variable:
        if (!(sn.min_hz > 0.0 && sn.min_hz <= sn.max_hz && sn.max_hz <= std::max(kMaxVariableHz, nominal_hz)))
          fail(loc, "variable frequency bounds must satisfy 0 < min_hz <= max_hz <= 60");
        break;
      case FrequencyMode::Dc: break;
    }
  }

  ids.clear();
  std::vector<int> n_ref(subnetworks.size(), 0), n_bus(subnetworks.size(), 0);
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const Bus& b = buses[i];
    const std::string loc = where("buses", i, b.id);
    if (b.id.empty()) fail(loc, "missing id");
    if (!ids.insert(b.id).second) fail(loc, "duplicate id");
    if (b.subnetwork < 0 || b.subnetwork >= ns) fail(loc, "not assigned to a subnetwork");
    if (!(b.base_kv > 0.0)) fail(loc, "base_kv must be positive");
    if (!(b.v_min > 0.0 && b.v_min <= b.v_max)) fail(loc, "voltage bounds must satisfy 0 < vmin <= vmax");
    if (b.shunt.kind == ShuntElement::Kind::Inductor) {
      if (!(b.shunt.nominal_value > 0.0)) fail(loc, "inductor shunt reactance must be positive");
      if (subnetworks[b.subnetwork].mode == FrequencyMode::Dc) fail(loc, "inductive shunt in a dc subnetwork");
    }
    ++n_bus[b.subnetwork];
    if (b.is_reference) ++n_ref[b.subnetwork];
  }
  for (std::size_t s = 0; s < subnetworks.size(); ++s) {
    if (n_bus[s] == 0) fail(where("subnetworks", s, subnetworks[s].id), "has no member buses");
    if (n_ref[s] == 0) fail(where("subnetworks", s, subnetworks[s].id), "has no reference bus");
  }

  ids.clear();
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const Branch& br = branches[k];
    const std::string loc = where("branches", k, br.id);
    if (br.id.empty()) fail(loc, "missing id");
    if (!ids.insert(br.id).second) fail(loc, "duplicate id");
    if (!bus_ok(br.from) || !bus_ok(br.to)) fail(loc, "dangling bus reference");
    if (br.from == br.to) fail(loc, "from and to bus are the same");
    if (buses[br.from].subnetwork != buses[br.to].subnetwork)
      fail(loc, "connects buses of different subnetworks; use a converter");
    if (!(br.thermal_limit > 0.0)) fail(loc, "thermal limit must be positive");
    if (!(br.angle_limit > 0.0)) fail(loc, "angle limit must be positive");
    const Subnetwork& sn = subnetwork_of(br.from);
    std::visit(Overloaded{
                   [&](const OverheadLine& l) {
                     if (!(l.r >= 0.0 && l.x >= 0.0 && l.b >= 0.0)) fail(loc, "r, x, b must be non-negative");
                     if (l.r == 0.0 && l.x == 0.0) fail(loc, "zero series impedance");
                   },
                   [&](const Transformer& t) {
                     if (!(t.r >= 0.0 && t.x >= 0.0 && t.b >= 0.0)) fail(loc, "r, x, b must be non-negative");
                     if (t.r == 0.0 && t.x == 0.0) fail(loc, "zero series impedance");
                     if (!(t.tap > 0.0)) fail(loc, "tap ratio must be positive");
                     if (sn.mode != FrequencyMode::Fixed || sn.frequency_hz != nominal_hz)
                       fail(loc, "transformer outside a standard-frequency subnetwork");
                   },
                   [&](const CableBranch& c) {
                     if (buses[br.from].base_kv != buses[br.to].base_kv)
                       fail(loc, "cable terminals have different base_kv");
                     if (!(c.model.n_samples > 0 && c.model.omega_max > c.model.omega_min))
                       fail(loc, "cable model has no fitted range");
                     if (sn.mode != FrequencyMode::Dc &&
                         (sn.omega_min() < c.model.omega_min * (1 - 1e-9) || sn.omega_max() > c.model.omega_max * (1 + 1e-9)))
                       fail(loc, "subnetwork frequency range exceeds the cable model's fitted range");
                   },
               },
               br.kind);
    if (sn.mode == FrequencyMode::Dc) {
      const bool lossless = std::visit(Overloaded{[](const OverheadLine& l) { return l.r == 0.0; },
                                                  [](const Transformer& t) { return t.r == 0.0; },
                                                  [](const CableBranch& c) { return !(c.model.r0 > 0.0); }},
                                       br.kind);
      if (lossless) fail(loc, "zero dc resistance in a dc subnetwork");
    }
  }

  ids.clear();
  for (std::size_t g = 0; g < generators.size(); ++g) {
    const Generator& gen = generators[g];
    const std::string loc = where("generators", g, gen.id);
    if (gen.id.empty()) fail(loc, "missing id");
    if (!ids.insert(gen.id).second) fail(loc, "duplicate id");
    if (!bus_ok(gen.bus)) fail(loc, "dangling bus reference");
    if (!(gen.p_min <= gen.p_max)) fail(loc, "pmin > pmax");
    if (!(gen.q_min <= gen.q_max)) fail(loc, "qmin > qmax");
    const GeneratorCost& c = gen.cost;
    if (c.kind == GeneratorCost::Kind::Polynomial) {
      if (!(c.c2 >= 0.0)) fail(loc, "quadratic cost coefficient must be non-negative (convexity)");
    } else {
      if (c.points.size() < 2) fail(loc, "piecewise-linear cost needs at least two points");
      double prev_slope = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 1; k < c.points.size(); ++k) {
        const double dp = c.points[k].first - c.points[k - 1].first;
        if (!(dp > 0.0)) fail(loc, "piecewise-linear cost points must have increasing p");
        const double slope = (c.points[k].second - c.points[k - 1].second) / dp;
        if (slope < prev_slope - 1e-12 * std::abs(prev_slope)) fail(loc, "piecewise-linear cost is not convex");
        prev_slope = slope;
      }
    }
  }

  ids.clear();
  for (std::size_t m = 0; m < converters.size(); ++m) {
    const Converter& cv = converters[m];
    const std::string loc = where("converters", m, cv.id);
    if (cv.id.empty()) fail(loc, "missing id");
    if (!ids.insert(cv.id).second) fail(loc, "duplicate id");
    if (!bus_ok(cv.bus_i) || !bus_ok(cv.bus_j)) fail(loc, "dangling bus reference");
    if (buses[cv.bus_i].subnetwork == buses[cv.bus_j].subnetwork) fail(loc, "terminals share a subnetwork");
    if (!(cv.s_max_i > 0.0 && cv.s_max_j > 0.0)) fail(loc, "apparent power limits must be positive");
  }

  // Subnetworks must form one connected graph through converters.
  std::vector<int> parent(subnetworks.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Converter& cv : converters) parent[find(buses[cv.bus_i].subnetwork)] = find(buses[cv.bus_j].subnetwork);
  for (int s = 1; s < ns; ++s)
    if (find(s) != find(0))
      fail(where("subnetworks", s, subnetworks[s].id), "not connected to '" + subnetworks[0].id + "' by converters");
}

std::vector<DirectedEdge> directed_edges(const Network& net) {
  std::vector<DirectedEdge> out;
  out.reserve(2 * net.branches.size());
  for (int k = 0; k < static_cast<int>(net.branches.size()); ++k) {
    const Branch& br = net.branches[k];
    out.push_back({k, br.from, br.to, true});
    out.push_back({k, br.to, br.from, false});
  }
  return out;
}

BranchAdmittance branch_admittance(const Network& net, const Branch& branch, double omega, bool dc) {
  return branch_admittance_derivatives(net, branch, omega, dc).value;
}

BranchAdmittanceDerivatives branch_admittance_derivatives(const Network& net, const Branch& branch, double omega,
                                                          bool dc) {
  BranchAdmittanceDerivatives out;
  if (dc) {
    out.value = dc_admittance(net, branch);
    return out;
  }
  if (!(omega > 0.0) || !std::isfinite(omega))
    throw InvalidInput("branch '" + branch.id + "': ac evaluation needs a positive frequency");
  check_fitted_range(branch, omega);
  const SeriesShunt s = series_shunt(net, branch, omega);
  if (s.z == 0.0) throw InvalidInput("branch '" + branch.id + "': zero series impedance");
  const std::complex<double> y = 1.0 / s.z;
  const std::complex<double> z2 = s.z * s.z;
  const std::complex<double> dy = -s.dz / z2;
  const std::complex<double> d2y = -s.d2z / z2 + 2.0 * s.dz * s.dz / (z2 * s.z);
  out.value = {y.real(), y.imag(), s.g_sh, s.b_sh};
  out.d1 = {dy.real(), dy.imag(), s.dg_sh, s.db_sh};
  out.d2 = {d2y.real(), d2y.imag(), s.d2g_sh, s.d2b_sh};
  return out;
}

double bus_shunt_susceptance(const Network& net, const Bus& bus, double omega, bool dc) {
  switch (bus.shunt.kind) {
    case ShuntElement::Kind::None: return 0.0;
    case ShuntElement::Kind::Capacitor: return dc ? 0.0 : omega * bus.shunt.nominal_value / net.nominal_omega();
    case ShuntElement::Kind::Inductor: {
      if (dc || !(omega > 0.0)) throw InvalidInput("bus '" + bus.id + "': inductive shunt needs a positive frequency");
      const double L = bus.shunt.nominal_value / net.nominal_omega();
      return -1.0 / (omega * L);
    }
  }
  return 0.0;
}

std::pair<double, double> bus_shunt_susceptance_derivatives(const Network& net, const Bus& bus, double omega) {
  switch (bus.shunt.kind) {
    case ShuntElement::Kind::None: return {0.0, 0.0};
    case ShuntElement::Kind::Capacitor: return {bus.shunt.nominal_value / net.nominal_omega(), 0.0};
    case ShuntElement::Kind::Inductor: {
      const double L = bus.shunt.nominal_value / net.nominal_omega();
      return {1.0 / (omega * omega * L), -2.0 / (omega * omega * omega * L)};
    }
  }
  return {0.0, 0.0};
}

}  // namespace lfac
