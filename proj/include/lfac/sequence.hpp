#pragma once

#include <complex>

#include <Eigen/Dense>

#include "lfac/cable.hpp"

namespace lfac {

using Matrix12c = Eigen::Matrix<cd, 12, 12>;
using Vector3c = Eigen::Matrix<cd, 3, 1>;

struct ReductionOptions {
  double max_eigvec_condition = 1e10;  // cond(V) of the ZY eigenbasis
  double max_sheath_condition = 1e12;  // cond(alpha_22)
  double min_c = 1e-14;                // |c| in siemens below which Pi extraction is refused
  double max_determinant_error = 1e-4; // |ad - bc - 1| accepted from the projected two-port
};

/// Origin quantities in terms of destination quantities for a cable of
/// given length: [V_o; I_o] = T·[V_d; I_d], conductors ordered as in
/// build_z_matrix. The 16 alpha blocks partition T into core/sheath
/// voltage and current groups of three.
struct TerminalMatrix {
  double omega = 0.0;
  double length = 0.0;
  Matrix12c T;

  /// alpha_ij, 1-based as in the partition [V; V^s; I; I^s].
  Matrix3c alpha(int i, int j) const { return T.block<3, 3>(3 * (i - 1), 3 * (j - 1)); }
};

TerminalMatrix terminal_solution(const Matrix6c& Z, const Matrix6c& Y, double length, double omega = 0.0,
                                 const ReductionOptions& opts = {});

/// Applies single-point bonding at the origin (V_o^s = 0, I_d^s = 0) and
/// returns the 6x6 core-only relation [V_o; I_o] = M·[V_d; I_d].
Matrix6c eliminate_sheaths(const TerminalMatrix& tm, const ReductionOptions& opts = {});

/// Averages each 3x3 block over the three cyclic phase rotations
/// (balanced transposition).
Matrix6c phase_average(const Matrix6c& reduced);

/// Fortescue projection vectors selecting the positive sequence:
/// row (1/3)[1, a, a^2] and column [1, a^2, a]^T with a = e^{j2pi/3}.
Eigen::Matrix<cd, 1, 3> positive_sequence_row();
Vector3c positive_sequence_column();

/// Positive-sequence two-port [V_o1; I_o1] = [a b; c d]·[V_d1; I_d1].
struct TwoPort {
  cd a, b, c, d;
  cd determinant() const { return a * d - b * c; }
};

TwoPort positive_sequence_two_port(const Matrix6c& reduced);

/// Lumped Pi equivalent of the positive sequence at one frequency.
/// y_shunt_half is the admittance placed at each terminal.
struct PiModel {
  double omega = 0.0;
  cd z_series;
  cd y_shunt_half;
  TwoPort two_port;

  cd y_shunt() const { return 2.0 * y_shunt_half; }
};

/// Extracts Z^ser = (d-1)(d+1)/c and Y^sh/2 = c/(d+1) from the
/// transposition-averaged reduced matrix.
PiModel positive_sequence_pi(const Matrix6c& reduced, double omega, const ReductionOptions& opts = {});

/// Full chain: Z, Y → terminal solution → sheath elimination → Pi.
PiModel exact_pi(const CableDesign& design, double omega, double length, const ReductionOptions& opts = {});
inline PiModel exact_pi(const CableDesign& design, double omega, const ReductionOptions& opts = {}) {
  return exact_pi(design, omega, design.length, opts);
}

}  // namespace lfac
