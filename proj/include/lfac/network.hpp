#pragma once

#include <complex>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lfac/cable.hpp"
#include "lfac/poly_fit.hpp"

namespace lfac {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

enum class FrequencyMode { Fixed, Variable, Dc };
const char* to_string(FrequencyMode m);

/// Region of the grid sharing one electrical frequency. Frequencies are
/// absolute (Hz on the struct, rad/s through the accessors).
struct Subnetwork {
  std::string id;
  FrequencyMode mode = FrequencyMode::Fixed;
  double frequency_hz = 60.0;  // Fixed
  double min_hz = 0.1;         // Variable
  double max_hz = 60.0;        // Variable

  double omega() const;
  double omega_min() const;
  double omega_max() const;

  friend bool operator==(const Subnetwork&, const Subnetwork&) = default;
};

/// Discrete bus shunt element, specified by its per-unit susceptance
/// (capacitor) or reactance (inductor) at the nominal frequency.
struct ShuntElement {
  enum class Kind { None, Capacitor, Inductor };
  Kind kind = Kind::None;
  double nominal_value = 0.0;

  friend bool operator==(const ShuntElement&, const ShuntElement&) = default;
};

struct Bus {
  std::string id;
  int subnetwork = 0;
  double base_kv = 0.0;
  double v_min = 0.95, v_max = 1.05;
  double p_load = 0.0, q_load = 0.0;
  double g_shunt = 0.0;
  ShuntElement shunt;
  bool is_reference = false;

  friend bool operator==(const Bus&, const Bus&) = default;
};

/// Constant R, L, C branch given as per-unit r, x, b at the nominal frequency.
struct OverheadLine {
  double r = 0.0, x = 0.0, b = 0.0;
  friend bool operator==(const OverheadLine&, const OverheadLine&) = default;
};

struct CableBranch {
  PolyCableModel model;     // ohm / siemens, total shunt
  std::string design;       // name of the design it was fitted from, may be empty
  double length_km = 0.0;
  friend bool operator==(const CableBranch&, const CableBranch&) = default;
};

struct Transformer {
  double r = 0.0, x = 0.0, b = 0.0;
  double tap = 1.0;
  double shift = 0.0;  // rad
  friend bool operator==(const Transformer&, const Transformer&) = default;
};

using BranchKind = std::variant<OverheadLine, CableBranch, Transformer>;

struct Branch {
  std::string id;
  int from = 0, to = 0;
  BranchKind kind;
  double thermal_limit = kUnbounded;  // per unit apparent power
  double angle_limit = 0.0;           // rad

  bool is_cable() const { return std::holds_alternative<CableBranch>(kind); }
  bool is_transformer() const { return std::holds_alternative<Transformer>(kind); }

  friend bool operator==(const Branch&, const Branch&) = default;
};

/// Convex cost in currency/hour of per-unit active power: either a
/// polynomial c2 p^2 + c1 p + c0, or a piecewise-linear curve through
/// (p, cost) breakpoints with nondecreasing slopes.
struct GeneratorCost {
  enum class Kind { Polynomial, PiecewiseLinear };
  Kind kind = Kind::Polynomial;
  double c2 = 0.0, c1 = 0.0, c0 = 0.0;
  std::vector<std::pair<double, double>> points;

  double value(double p) const;
  friend bool operator==(const GeneratorCost&, const GeneratorCost&) = default;
};

struct Generator {
  std::string id;
  int bus = 0;
  double p_min = 0.0, p_max = 0.0;
  double q_min = 0.0, q_max = 0.0;
  GeneratorCost cost;

  friend bool operator==(const Generator&, const Generator&) = default;
};

/// Lossless AC/AC converter: p_i + p_j = 0, independent reactive injections.
struct Converter {
  std::string id;
  int bus_i = 0, bus_j = 0;
  double s_max_i = kUnbounded, s_max_j = kUnbounded;

  friend bool operator==(const Converter&, const Converter&) = default;
};

struct Network {
  std::string name;
  double base_mva = 100.0;
  double nominal_hz = 60.0;
  std::vector<Subnetwork> subnetworks;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<Converter> converters;
  std::map<std::string, CableDesign> cable_designs;

  double nominal_omega() const;
  const Subnetwork& subnetwork_of(int bus) const { return subnetworks[buses[bus].subnetwork]; }
  std::vector<int> members(int subnetwork) const;

  /// Structural validation; throws ParseError naming the offending record.
  void validate() const;

  friend bool operator==(const Network&, const Network&) = default;
};

/// Each physical branch contributes two directed edges.
struct DirectedEdge {
  int branch = 0;
  int origin = 0, target = 0;
  bool forward = true;
};
std::vector<DirectedEdge> directed_edges(const Network& net);

// ---------------------------------------------------------------------------
// Frequency-dependent parameters
// ---------------------------------------------------------------------------

/// Per-unit series admittance G + jB and per-terminal shunt Gsh + jBsh.
struct BranchAdmittance {
  double G = 0, B = 0, G_sh = 0, B_sh = 0;
};

/// Same quantities with first and second derivatives in omega (rad/s).
struct BranchAdmittanceDerivatives {
  BranchAdmittance value, d1, d2;
};

/// omega is ignored for dc subnetworks (pass dc = true).
BranchAdmittance branch_admittance(const Network& net, const Branch& branch, double omega, bool dc = false);
BranchAdmittanceDerivatives branch_admittance_derivatives(const Network& net, const Branch& branch, double omega,
                                                          bool dc = false);

/// Susceptance of the bus's discrete shunt element at omega (per unit).
double bus_shunt_susceptance(const Network& net, const Bus& bus, double omega, bool dc = false);
/// d/domega and d2/domega2 of bus_shunt_susceptance.
std::pair<double, double> bus_shunt_susceptance_derivatives(const Network& net, const Bus& bus, double omega);

/// Impedance base in ohms for a bus voltage base (kV) and system base (MVA).
inline double impedance_base(double base_kv, double base_mva) { return base_kv * base_kv / base_mva; }
inline double ohm_to_pu(double ohm, double base_kv, double base_mva) { return ohm / impedance_base(base_kv, base_mva); }
inline double pu_to_ohm(double pu, double base_kv, double base_mva) { return pu * impedance_base(base_kv, base_mva); }
inline double siemens_to_pu(double s, double base_kv, double base_mva) { return s * impedance_base(base_kv, base_mva); }
inline double pu_to_siemens(double pu, double base_kv, double base_mva) { return pu / impedance_base(base_kv, base_mva); }

}  // namespace lfac
