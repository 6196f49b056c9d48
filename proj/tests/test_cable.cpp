#include <cmath>
#include <numbers>

#include <doctest.h>

#include "lfac/cable.hpp"
#include "lfac/errors.hpp"
#include "support.hpp"

using namespace lfac;
using std::numbers::pi;

namespace {

// Composite Simpson rule for ∫_a^b dr / r.
double log_integral(double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = 1.0 / a + 1.0 / b;
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) / (a + k * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("material table and temperature law") {
  const auto cu = find_material("Copper");
  REQUIRE(cu);
  CHECK(cu->resistivity_20C == doctest::Approx(1.68e-8));
  CHECK(cu->resistivity_at(90.0) == doctest::Approx(1.68e-8 * (1.0 + 3.93e-3 * 70.0)).epsilon(1e-14));
  CHECK(cu->resistivity_at(20.0) == cu->resistivity_20C);
  CHECK(find_material("aluminum"));
  CHECK(find_material("XLPE"));
  CHECK_FALSE(find_material("unobtainium"));
}

TEST_CASE("coaxial insulation admittance matches the field-integral oracle") {
  const CableDesign d = test::design_230kv();
  const double omega = 2 * pi * 50;
  const CableComponents c = cable_components(d, omega);
  const double eps = kEps0 * d.insulation.permittivity_rel;
  const double sigma = 1.0 / d.insulation.resistivity_20C;

  const double inner = log_integral(d.R1, d.R2);
  const double outer = log_integral(d.R3, d.R4);
  CHECK(test::rel_err(c.y1.imag(), omega * 2 * pi * eps / inner) < 1e-9);
  CHECK(test::rel_err(c.y1.real(), 2 * pi * sigma / inner) < 1e-9);
  CHECK(test::rel_err(c.y2.imag(), omega * 2 * pi * eps / outer) < 1e-9);
  CHECK(test::rel_err(c.y2.real(), 2 * pi * sigma / outer) < 1e-9);

  // The 230 kV design carries about 0.2 µF/km per phase.
  const double c_per_km = c.y1.imag() / omega * 1e3;
  CHECK(c_per_km > 0.15e-6);
  CHECK(c_per_km < 0.3e-6);
}

TEST_CASE("insulation inductance term") {
  const CableDesign d = test::design_138kv();
  const double omega = 2 * pi * 60;
  const CableComponents c = cable_components(d, omega);
  CHECK(test::rel_err(c.z2, cd(0.0, omega * d.insulation.permeability / (2 * pi) * std::log(d.R2 / d.R1))) < 1e-14);
  CHECK(test::rel_err(c.z6, cd(0.0, omega * d.insulation.permeability / (2 * pi) * std::log(d.R4 / d.R3))) < 1e-14);
}

TEST_CASE("conductor impedance tends to the dc resistance") {
  const CableDesign d = test::design_230kv();
  const double rho = d.conductor.resistivity_at(d.operating_temp);
  const double r_dc = rho / (pi * d.R1 * d.R1);
  const CableComponents c = cable_components(d, 1e-3);
  CHECK(test::rel_err(c.z1.real(), r_dc) < 1e-9);
  // Internal inductance of a solid round wire: mu / (8 pi).
  CHECK(test::rel_err(c.z1.imag() / 1e-3, d.conductor.permeability / (8 * pi)) < 1e-6);

  const CableComponents z0 = cable_components(d, 0.0);
  CHECK(z0.z1 == cd(r_dc, 0.0));
}

TEST_CASE("conductor impedance approaches the skin-effect limit") {
  const CableDesign d = test::design_230kv();
  const double rho = d.conductor.resistivity_at(d.operating_temp);
  const double omega = 1e9;
  const cd m = std::sqrt(cd(0.0, omega * d.conductor.permeability / rho));
  const CableComponents c = cable_components(d, omega);
  // I0/I1 -> 1 + 1/(2 m R1) for large |m R1|.
  const cd limit = rho * m / (2 * pi * d.R1) * (1.0 + 1.0 / (2.0 * m * d.R1));
  CHECK(test::rel_err(c.z1, limit) < 1e-6);
}

TEST_CASE("sheath tube terms coincide at low frequency") {
  const CableDesign d = test::design_230kv();
  const double rho = d.sheath.resistivity_at(d.operating_temp);
  const double r_tube = rho / (pi * (d.R3 * d.R3 - d.R2 * d.R2));
  const CableComponents c = cable_components(d, 1e-3);
  CHECK(test::rel_err(c.z3.real(), r_tube) < 1e-6);
  CHECK(test::rel_err(c.z4.real(), r_tube) < 1e-6);
  CHECK(test::rel_err(c.z5.real(), r_tube) < 1e-6);
}

TEST_CASE("impedance and admittance matrices are symmetric with the documented layout") {
  const CableDesign d = test::design_230kv();
  const DistributedMatrices m = distributed_matrices(d, 2 * pi * 60);
  CHECK((m.Z - m.Z.transpose()).norm() <= 1e-15 * m.Z.norm());
  CHECK((m.Y - m.Y.transpose()).norm() == 0.0);
  const CableComponents c = cable_components(d, 2 * pi * 60);
  CHECK(m.Z(0, 1) == c.mutual_adjacent);
  CHECK(m.Z(0, 2) == c.mutual_outer);
  CHECK(m.Z(3, 3) == c.z5 + c.z6 + c.z7);
  CHECK(m.Y(0, 3) == -c.y1);
  CHECK(m.Y(0, 1) == cd(0.0, 0.0));
  // Series resistance and reactance must be positive on the diagonal.
  for (int i = 0; i < 6; ++i) {
    CHECK(m.Z(i, i).real() > 0.0);
    CHECK(m.Z(i, i).imag() > 0.0);
  }
}

TEST_CASE("invalid designs are rejected") {
  CableDesign d = test::design_230kv();
  CHECK_NOTHROW(d.validate());
  CableDesign bad = d;
  bad.R2 = bad.R1;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = d;
  bad.spacing_d = bad.R4;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = d;
  bad.depth_h = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = d;
  bad.soil_resistivity = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  CHECK_THROWS_AS(cable_components(d, -1.0), InvalidInput);
}
