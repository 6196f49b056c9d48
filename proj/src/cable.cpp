#include "lfac/cable.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lfac/bessel.hpp"
#include "lfac/errors.hpp"

namespace lfac {
namespace {

constexpr double kPi = std::numbers::pi;
const cd kJ(0.0, 1.0);

const std::array<MaterialProperties, 4> kMaterials = {{
    {"copper", 1.68e-8, 3.93e-3, 1.25663e-6, 1.0},
    {"aluminum", 2.65e-8, 4.03e-3, 1.25667e-6, 1.0},
    {"xlpe", 2.00e11, 0.0, kMu0, 2.3},
    {"soil", 100.0, 0.0, kMu0, 1.0},
}};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

void require(bool ok, const std::string& design, const char* what) {
  if (!ok) {
    std::ostringstream msg;
    msg << "cable design '" << design << "': " << what;
    throw InvalidInput(msg.str());
  }
}

// Earth-return self (distance = outer radius) or mutual impedance.
cd earth_impedance(double omega, double soil_rho, double distance, double depth_sum) {
  const cd m = std::sqrt(kJ * omega * kMu0 / soil_rho);
  const double gamma = std::exp(std::numbers::egamma);
  return kJ * omega * kMu0 / (2.0 * kPi) *
         (-std::log(gamma * m * distance / 2.0) + 0.5 - 2.0 / 3.0 * m * depth_sum);
}

}  // namespace

std::optional<MaterialProperties> find_material(std::string_view name) {
  const std::string key = lower(name);
  for (const auto& m : kMaterials)
    if (m.name == key) return m;
  return std::nullopt;
}

void CableDesign::validate() const {
  require(R1 > 0.0, name, "R1 must be positive");
  require(R1 < R2, name, "R1 < R2 violated");
  require(R2 < R3, name, "R2 < R3 violated");
  require(R3 < R4, name, "R3 < R4 violated");
  require(R4 < spacing_d, name, "R4 < spacing_d violated");
  require(depth_h > R4, name, "depth_h must exceed R4");
  require(length > 0.0, name, "length must be positive");
  require(conductor.resistivity_20C > 0.0 && sheath.resistivity_20C > 0.0 &&
              insulation.resistivity_20C > 0.0,
          name, "resistivities must be positive");
  require(conductor.resistivity_at(operating_temp) > 0.0 && sheath.resistivity_at(operating_temp) > 0.0, name,
          "resistivity at operating temperature must be positive");
  require(conductor.permeability > 0.0 && sheath.permeability > 0.0 && insulation.permeability > 0.0, name,
          "permeabilities must be positive");
  require(insulation.permittivity_rel >= 1.0, name, "insulation relative permittivity must be >= 1");
  require(soil_resistivity > 0.0, name, "soil resistivity must be positive");
  require(std::isfinite(R1 + R2 + R3 + R4 + spacing_d + depth_h + length), name, "non-finite dimension");
}

CableComponents cable_components(const CableDesign& d, double omega) {
  d.validate();
  if (!(omega >= 0.0) || !std::isfinite(omega)) throw InvalidInput("omega must be finite and non-negative");

  const double rho_c = d.conductor.resistivity_at(d.operating_temp);
  const double rho_s = d.sheath.resistivity_at(d.operating_temp);
  const double mu_ins = d.insulation.permeability;
  const double log21 = std::log(d.R2 / d.R1);
  const double log43 = std::log(d.R4 / d.R3);

  CableComponents c;
  c.omega = omega;
  c.z2 = kJ * omega * mu_ins / (2.0 * kPi) * log21;
  c.z6 = kJ * omega * mu_ins / (2.0 * kPi) * log43;

  const double cap1 = 2.0 * kPi * kEps0 * d.insulation.permittivity_rel / log21;
  const double cap2 = 2.0 * kPi * kEps0 * d.insulation.permittivity_rel / log43;
  c.y1 = 2.0 * kPi / (d.insulation.resistivity_20C * log21) + kJ * omega * cap1;
  c.y2 = 2.0 * kPi / (d.insulation.resistivity_20C * log43) + kJ * omega * cap2;

  if (omega == 0.0) {
    const double tube = rho_s / (kPi * (d.R3 * d.R3 - d.R2 * d.R2));
    c.z1 = rho_c / (kPi * d.R1 * d.R1);
    c.z3 = c.z4 = c.z5 = tube;
    c.z7 = c.mutual_adjacent = c.mutual_outer = 0.0;
    return c;
  }

  const cd mc = std::sqrt(kJ * omega * d.conductor.permeability / rho_c);
  c.z1 = rho_c * mc / (2.0 * kPi * d.R1) * bessel_i0_over_i1(mc * d.R1);

  // Tubular sheath: all terms carry a common factor e^{m(R3-R2)} that is
  // divided out; only its square remains.
  const cd ms = std::sqrt(kJ * omega * d.sheath.permeability / rho_s);
  const ScaledBessel in = scaled_bessel(ms * d.R2);
  const ScaledBessel out = scaled_bessel(ms * d.R3);
  const cd e = std::exp(ms * (d.R3 - d.R2));
  const cd e_inv2 = 1.0 / (e * e);
  const cd den = out.i1 * in.k1 - in.i1 * out.k1 * e_inv2;
  const cd num3 = in.i0 * out.k1 * e_inv2 + in.k0 * out.i1;
  const cd num5 = out.i0 * in.k1 + out.k0 * in.i1 * e_inv2;
  c.z3 = rho_s * ms / (2.0 * kPi * d.R2) * num3 / den;
  c.z5 = rho_s * ms / (2.0 * kPi * d.R3) * num5 / den;
  c.z4 = rho_s / (2.0 * kPi * d.R2 * d.R3 * e * den);

  c.z7 = earth_impedance(omega, d.soil_resistivity, d.R4, 2.0 * d.depth_h);
  c.mutual_adjacent = earth_impedance(omega, d.soil_resistivity, d.spacing_d, 2.0 * d.depth_h);
  c.mutual_outer = earth_impedance(omega, d.soil_resistivity, 2.0 * d.spacing_d, 2.0 * d.depth_h);

  for (const cd v : {c.z1, c.z3, c.z4, c.z5, c.z7, c.mutual_adjacent, c.mutual_outer})
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw NumericalError("cable impedance component is not finite at omega = " + std::to_string(omega));
  return c;
}

Matrix6c build_z_matrix(const CableDesign& design, double omega) {
  const CableComponents c = cable_components(design, omega);
  const cd sheath_loop = c.z5 + c.z6 + c.z7;
  const cd core_self = c.z1 + c.z2 + c.z3 - 2.0 * c.z4 + sheath_loop;
  const cd core_sheath = sheath_loop - c.z4;

  Matrix6c Z;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) {
        Z(i, i) = core_self;
        Z(i, i + 3) = Z(i + 3, i) = core_sheath;
        Z(i + 3, i + 3) = sheath_loop;
      } else {
        const cd m = std::abs(i - j) == 1 ? c.mutual_adjacent : c.mutual_outer;
        Z(i, j) = Z(i, j + 3) = Z(i + 3, j) = Z(i + 3, j + 3) = m;
      }
    }
  }
  return Z;
}

Matrix6c build_y_matrix(const CableDesign& design, double omega) {
  const CableComponents c = cable_components(design, omega);
  Matrix6c Y = Matrix6c::Zero();
  for (int i = 0; i < 3; ++i) {
    Y(i, i) = c.y1;
    Y(i, i + 3) = Y(i + 3, i) = -c.y1;
    Y(i + 3, i + 3) = c.y1 + c.y2;
  }
  return Y;
}

DistributedMatrices distributed_matrices(const CableDesign& design, double omega) {
  return {omega, build_z_matrix(design, omega), build_y_matrix(design, omega)};
}

}  // namespace lfac
