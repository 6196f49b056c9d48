#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "lfac/errors.hpp"
#include "lfac/sequence.hpp"
#include "support.hpp"

using namespace lfac;
using std::numbers::pi;

namespace {

using Matrix24c = Eigen::Matrix<cd, 24, 24>;
using Vector24c = Eigen::Matrix<cd, 24, 1>;

// Classical RK4 on dPhi/ds = A Phi, s running from the destination to the
// origin, with A = [0 Z; Y 0].
Matrix12c rk4_terminal(const Matrix6c& Z, const Matrix6c& Y, double length, int steps) {
  Matrix12c A = Matrix12c::Zero();
  A.topRightCorner<6, 6>() = Z;
  A.bottomLeftCorner<6, 6>() = Y;
  const double h = length / steps;
  Matrix12c phi = Matrix12c::Identity();
  for (int k = 0; k < steps; ++k) {
    const Matrix12c k1 = A * phi;
    const Matrix12c k2 = A * (phi + 0.5 * h * k1);
    const Matrix12c k3 = A * (phi + 0.5 * h * k2);
    const Matrix12c k4 = A * (phi + h * k3);
    phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return phi;
}

Matrix6c scalar_line_reduced(cd a, cd b, cd c, cd d) {
  Matrix6c m = Matrix6c::Zero();
  for (int i = 0; i < 3; ++i) {
    m(i, i) = a;
    m(i, i + 3) = b;
    m(i + 3, i) = c;
    m(i + 3, i + 3) = d;
  }
  return m;
}

}  // namespace

TEST_CASE("terminal solution matches fine-grid RK4 integration") {
  const CableDesign designs[] = {test::design_230kv(), test::design_138kv()};
  const double lengths[] = {1e3, 22e3, 60e3};
  const double omegas[] = {2 * pi * 0.5, 2 * pi * 10, 2 * pi * 60};
  for (const CableDesign& d : designs)
    for (double len : lengths)
      for (double w : omegas) {
        CAPTURE(d.name);
        CAPTURE(len);
        CAPTURE(w);
        const DistributedMatrices m = distributed_matrices(d, w);
        const TerminalMatrix tm = terminal_solution(m.Z, m.Y, len, w);
        const Matrix12c ref = rk4_terminal(m.Z, m.Y, len, 10000);
        // Column blocks carry different units; compare block by block.
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            const auto a = tm.T.block<6, 6>(6 * i, 6 * j);
            const auto b = ref.block<6, 6>(6 * i, 6 * j);
            CHECK((a - b).norm() <= 1e-6 * b.norm());
          }
      }
}

TEST_CASE("sheath elimination matches the explicit constrained 12-variable solve") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const CableDesign d = test::design_230kv();
  for (double w : {2 * pi * 1.0, 2 * pi * 60.0}) {
    const DistributedMatrices m = distributed_matrices(d, w);
    const TerminalMatrix tm = terminal_solution(m.Z, m.Y, 50e3, w);
    const Matrix6c M = eliminate_sheaths(tm);

    // Unknowns [origin (V, Vs, I, Is); destination (V, Vs, I, Is)].
    Matrix24c A = Matrix24c::Zero();
    Vector24c rhs = Vector24c::Zero();
    A.topLeftCorner<12, 12>().setIdentity();
    A.topRightCorner<12, 12>() = -tm.T;
    Eigen::Matrix<cd, 6, 1> core_d;
    for (int k = 0; k < 6; ++k) core_d[k] = cd(u(rng), u(rng)) * (k < 3 ? 1e5 : 1e2);
    int row = 12;
    for (int k = 0; k < 3; ++k) A(row++, 3 + k) = 1.0;        // V_o^s = 0
    for (int k = 0; k < 3; ++k) A(row++, 12 + 9 + k) = 1.0;   // I_d^s = 0
    for (int k = 0; k < 3; ++k) {                              // V_d, I_d given
      A(row, 12 + k) = 1.0;
      rhs[row++] = core_d[k];
    }
    for (int k = 0; k < 3; ++k) {
      A(row, 12 + 6 + k) = 1.0;
      rhs[row++] = core_d[3 + k];
    }
    const Vector24c x = A.fullPivLu().solve(rhs);
    Eigen::Matrix<cd, 6, 1> core_o;
    core_o << x.segment<3>(0), x.segment<3>(6);
    const Eigen::Matrix<cd, 6, 1> via_m = M * core_d;
    CAPTURE(w);
    CHECK((via_m.head<3>() - core_o.head<3>()).norm() <= 1e-9 * core_o.head<3>().norm());
    CHECK((via_m.tail<3>() - core_o.tail<3>()).norm() <= 1e-9 * core_o.tail<3>().norm());
  }
}

TEST_CASE("Pi extraction reproduces the scalar long-line solution") {
  const cd z(0.03e-3, 0.45e-3), y(1e-11, 8.6e-8);  // per metre
  const double len = 135e3;
  const cd gamma = std::sqrt(z * y), zc = std::sqrt(z / y);
  const cd gl = gamma * len;
  const Matrix6c reduced = scalar_line_reduced(std::cosh(gl), zc * std::sinh(gl), std::sinh(gl) / zc, std::cosh(gl));
  const PiModel pi_model = positive_sequence_pi(reduced, 2 * pi * 60);
  CHECK(test::rel_err(pi_model.z_series, zc * std::sinh(gl)) < 1e-12);
  CHECK(test::rel_err(pi_model.y_shunt_half, std::tanh(gl / 2.0) / zc) < 1e-12);
  CHECK(test::rel_err(pi_model.y_shunt(), 2.0 * std::tanh(gl / 2.0) / zc) < 1e-12);
  CHECK(std::abs(pi_model.two_port.determinant() - 1.0) < 1e-12);
}

TEST_CASE("phase averaging is a projection and preserves the positive sequence") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix6c m;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) m(i, j) = cd(u(rng), u(rng));
  const Matrix6c avg = phase_average(m);
  CHECK((phase_average(avg) - avg).norm() < 1e-14);
  const TwoPort raw = positive_sequence_two_port(m);
  const TwoPort averaged = positive_sequence_two_port(avg);
  CHECK(std::abs(raw.a - averaged.a) < 1e-14);
  CHECK(std::abs(raw.b - averaged.b) < 1e-14);
  CHECK(std::abs(raw.c - averaged.c) < 1e-14);
  CHECK(std::abs(raw.d - averaged.d) < 1e-14);
  // Each averaged block is circulant.
  for (int bi = 0; bi < 2; ++bi)
    for (int bj = 0; bj < 2; ++bj)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          CHECK(std::abs(avg(3 * bi + i, 3 * bj + j) - avg(3 * bi + (i + 1) % 3, 3 * bj + (j + 1) % 3)) < 1e-14);
}

TEST_CASE("Fortescue projection vectors are dual") {
  const cd s = (positive_sequence_row() * positive_sequence_column())(0, 0);
  CHECK(std::abs(s - 1.0) < 1e-15);
}

TEST_CASE("exact Pi of the 230 kV design") {
  const CableDesign d = test::design_230kv();
  SUBCASE("per-kilometre resistance at 50 Hz") {
    const PiModel p = exact_pi(d, 2 * pi * 50, 1e3);
    CHECK(p.z_series.real() == doctest::Approx(0.0161).epsilon(0.05));
    CHECK(p.z_series.imag() > 0.0);
    CHECK(p.y_shunt().imag() > 0.0);
  }
  SUBCASE("full length two-port is reciprocal") {
    const PiModel p = exact_pi(d, 2 * pi * 60);
    CHECK(std::abs(p.two_port.determinant() - 1.0) < 1e-4);
    // Total shunt is twice the per-terminal value.
    CHECK(p.y_shunt() == 2.0 * p.y_shunt_half);
  }
  SUBCASE("short cable approaches the distributed per-length parameters") {
    const double len = 100.0;
    const PiModel p = exact_pi(d, 2 * pi * 60, len);
    const PiModel q = exact_pi(d, 2 * pi * 60, 2 * len);
    CHECK(test::rel_err(q.z_series, 2.0 * p.z_series) < 1e-6);
    CHECK(test::rel_err(q.y_shunt(), 2.0 * p.y_shunt()) < 1e-6);
  }
}

TEST_CASE("138 kV design resistance at 50 Hz") {
  const PiModel p = exact_pi(test::design_138kv(), 2 * pi * 50, 1e3);
  CHECK(p.z_series.real() == doctest::Approx(0.0323).epsilon(0.05));
}

TEST_CASE("degenerate reductions are refused") {
  const Matrix6c zero = Matrix6c::Zero();
  CHECK_THROWS_AS(positive_sequence_pi(zero, 1.0), NumericalError);
}
