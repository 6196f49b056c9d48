#pragma once

#include <complex>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace lfac {

using cd = std::complex<double>;
using Matrix6c = Eigen::Matrix<cd, 6, 6>;
using Matrix3c = Eigen::Matrix<cd, 3, 3>;

inline constexpr double kMu0 = 1.25663706212e-6;     // H/m
inline constexpr double kEps0 = 8.8541878128e-12;    // F/m

struct MaterialProperties {
  std::string name;
  double resistivity_20C = 0.0;   // ohm·m
  double temp_coefficient = 0.0;  // 1/K
  double permeability = kMu0;     // H/m
  double permittivity_rel = 1.0;

  /// Linear temperature law rho(T) = rho_20·(1 + alpha·(T − 20)).
  double resistivity_at(double temp_c) const {
    return resistivity_20C * (1.0 + temp_coefficient * (temp_c - 20.0));
  }

  friend bool operator==(const MaterialProperties&, const MaterialProperties&) = default;
};

/// Built-in material table (copper, aluminum, xlpe, soil). Lookup is
/// case-insensitive; returns nullopt for unknown names.
std::optional<MaterialProperties> find_material(std::string_view name);

/// Buried three-phase system of single-core cables in flat formation.
struct CableDesign {
  std::string name;
  double R1 = 0.0;         // conductor radius, m
  double R2 = 0.0;         // outer radius of inner insulation, m
  double R3 = 0.0;         // outer radius of sheath, m
  double R4 = 0.0;         // outer radius, m
  double spacing_d = 0.0;  // centre-to-centre distance of adjacent cables, m
  double depth_h = 0.0;    // burial depth, m
  MaterialProperties conductor;
  MaterialProperties sheath;
  MaterialProperties insulation;
  double soil_resistivity = 100.0;  // ohm·m
  double operating_temp = 20.0;     // °C
  double voltage_rating = 0.0;      // V, line-to-line rms
  double nominal_voltage = 0.0;     // V, system voltage used as the per-unit base; 0 means voltage_rating
  double thermal_rating = 0.0;      // VA
  double length = 0.0;              // m

  double base_voltage() const { return nominal_voltage > 0.0 ? nominal_voltage : voltage_rating; }

  /// Throws InvalidInput naming the first violated invariant.
  void validate() const;

  friend bool operator==(const CableDesign&, const CableDesign&) = default;
};

/// Per-unit-length impedance/admittance components of one cable (ohm/m, S/m).
/// z1..z6 follow the loop formulation: core-sheath loop z1+z2+z3, sheath
/// mutual z4, sheath-earth loop z5+z6+z7. mutual_adjacent and mutual_outer
/// are the earth-return mutual impedances at spacing d and 2d.
struct CableComponents {
  double omega = 0.0;
  cd z1, z2, z3, z4, z5, z6, z7;
  cd mutual_adjacent, mutual_outer;
  cd y1, y2;
};

CableComponents cable_components(const CableDesign& design, double omega);

/// Series impedance matrix Z(omega), ohm/m. Conductor ordering is
/// [core a, core b, core c, sheath a, sheath b, sheath c].
Matrix6c build_z_matrix(const CableDesign& design, double omega);

/// Shunt admittance matrix Y(omega), S/m, same ordering as build_z_matrix.
Matrix6c build_y_matrix(const CableDesign& design, double omega);

struct DistributedMatrices {
  double omega = 0.0;
  Matrix6c Z;
  Matrix6c Y;
};

DistributedMatrices distributed_matrices(const CableDesign& design, double omega);

}  // namespace lfac
