#include "lfac/sequence.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lfac/errors.hpp"

namespace lfac {
namespace {

using Vector6c = Eigen::Matrix<cd, 6, 1>;

// Scalar functions of one eigenvalue lambda of ZY with g = sqrt(lambda):
// cosh(l g), sinh(l g)/g and g·sinh(l g).
struct ModeFunctions {
  cd cosh_term, sinh_over_g, g_sinh;
};

ModeFunctions mode_functions(cd lambda, double length) {
  const cd g = std::sqrt(lambda);
  const cd x = length * g;
  ModeFunctions f;
  f.cosh_term = std::cosh(x);
  if (std::abs(x) < 1e-4) {
    const cd x2 = x * x;
    f.sinh_over_g = length * (1.0 + x2 / 6.0 + x2 * x2 / 120.0);
  } else {
    f.sinh_over_g = std::sinh(x) / g;
  }
  f.g_sinh = lambda * f.sinh_over_g;
  return f;
}

Matrix3c cyclic_average(const Matrix3c& m) {
  Matrix3c out = Matrix3c::Zero();
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out(i, j) += m((i + k) % 3, (j + k) % 3);
  return out / 3.0;
}

}  // namespace

TerminalMatrix terminal_solution(const Matrix6c& Z, const Matrix6c& Y, double length, double omega,
                                 const ReductionOptions& opts) {
  if (!(length >= 0.0) || !std::isfinite(length)) throw InvalidInput("cable length must be finite and non-negative");
  TerminalMatrix tm;
  tm.omega = omega;
  tm.length = length;
  if (length == 0.0) {
    tm.T.setIdentity();
    return tm;
  }

  const Matrix6c ZY = Z * Y;
  Eigen::ComplexEigenSolver<Matrix6c> eig(ZY);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of ZY failed");
  const Vector6c lambda = eig.eigenvalues();
  const Matrix6c V = eig.eigenvectors();

  const double scale = ZY.cwiseAbs().maxCoeff();
  for (int k = 0; k < 6; ++k) {
    const cd l = lambda(k);
    if (l.real() < 0.0 && std::abs(l.imag()) <= 1e-14 * std::max(scale, std::abs(l))) {
      std::ostringstream msg;
      msg << "ZY eigenvalue " << l << " lies on the negative real axis; principal square root is ambiguous";
      throw BranchCutError(msg.str());
    }
  }

  Eigen::JacobiSVD<Matrix6c> svd(V);
  const auto& sv = svd.singularValues();
  const double cond = sv(5) > 0.0 ? sv(0) / sv(5) : std::numeric_limits<double>::infinity();
  if (!(cond <= opts.max_eigvec_condition))
    throw IllConditioned("ZY eigenbasis is ill-conditioned (cond = " + std::to_string(cond) + ")", cond);

  Vector6c f_cosh, f_sinh_over_g, f_g_sinh;
  for (int k = 0; k < 6; ++k) {
    const ModeFunctions f = mode_functions(lambda(k), length);
    f_cosh(k) = f.cosh_term;
    f_sinh_over_g(k) = f.sinh_over_g;
    f_g_sinh(k) = f.g_sinh;
  }

  const Eigen::PartialPivLU<Matrix6c> v_lu(V);
  const Eigen::PartialPivLU<Matrix6c> z_lu(Z);
  auto apply = [&](const Vector6c& diag) -> Matrix6c { return V * diag.asDiagonal() * v_lu.inverse(); };

  const Matrix6c B = apply(f_cosh);
  tm.T.topLeftCorner<6, 6>() = B;
  tm.T.topRightCorner<6, 6>() = apply(f_sinh_over_g) * Z;
  tm.T.bottomLeftCorner<6, 6>() = z_lu.solve(apply(f_g_sinh));
  tm.T.bottomRightCorner<6, 6>() = z_lu.solve(B * Z);
  return tm;
}

Matrix6c eliminate_sheaths(const TerminalMatrix& tm, const ReductionOptions& opts) {
  const Matrix3c a22 = tm.alpha(2, 2);
  const Eigen::PartialPivLU<Matrix3c> lu(a22);
  const double rcond = lu.rcond();
  const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(cond <= opts.max_sheath_condition))
    throw IllConditioned("alpha_22 is singular or ill-conditioned (cond ~ " + std::to_string(cond) + ")", cond);

  const Matrix3c x21 = lu.solve(tm.alpha(2, 1));
  const Matrix3c x23 = lu.solve(tm.alpha(2, 3));
  Matrix6c m;
  m.topLeftCorner<3, 3>() = tm.alpha(1, 1) - tm.alpha(1, 2) * x21;
  m.topRightCorner<3, 3>() = tm.alpha(1, 3) - tm.alpha(1, 2) * x23;
  m.bottomLeftCorner<3, 3>() = tm.alpha(3, 1) - tm.alpha(3, 2) * x21;
  m.bottomRightCorner<3, 3>() = tm.alpha(3, 3) - tm.alpha(3, 2) * x23;
  return m;
}

Matrix6c phase_average(const Matrix6c& reduced) {
  Matrix6c out;
  for (int bi = 0; bi < 2; ++bi)
    for (int bj = 0; bj < 2; ++bj)
      out.block<3, 3>(3 * bi, 3 * bj) = cyclic_average(reduced.block<3, 3>(3 * bi, 3 * bj));
  return out;
}

Eigen::Matrix<cd, 1, 3> positive_sequence_row() {
  const cd a = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
  Eigen::Matrix<cd, 1, 3> row;
  row << 1.0, a, std::conj(a);
  return row / 3.0;
}

Vector3c positive_sequence_column() {
  const cd a = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
  Vector3c col;
  col << 1.0, std::conj(a), a;
  return col;
}

TwoPort positive_sequence_two_port(const Matrix6c& reduced) {
  const auto row = positive_sequence_row();
  const Vector3c col = positive_sequence_column();
  auto project = [&](int bi, int bj) { return (row * reduced.block<3, 3>(3 * bi, 3 * bj) * col)(0, 0); };
  return {project(0, 0), project(0, 1), project(1, 0), project(1, 1)};
}

PiModel positive_sequence_pi(const Matrix6c& reduced, double omega, const ReductionOptions& opts) {
  const TwoPort tp = positive_sequence_two_port(phase_average(reduced));
  if (tp.c == 0.0 && tp.d == 1.0) throw InvalidInput("zero-length two-port has no Pi equivalent");
  if (std::abs(tp.c) < opts.min_c) throw NumericalError("electrically too short for Pi extraction (|c| below tolerance)");
  const double det_err = std::abs(tp.determinant() - 1.0);
  if (!(det_err <= opts.max_determinant_error)) {
    std::ostringstream msg;
    msg << "positive-sequence two-port is not reciprocal (|ad - bc - 1| = " << det_err << ")";
    throw NumericalError(msg.str());
  }
  PiModel pi;
  pi.omega = omega;
  pi.two_port = tp;
  pi.z_series = (tp.d - 1.0) * (tp.d + 1.0) / tp.c;
  pi.y_shunt_half = tp.c / (tp.d + 1.0);
  return pi;
}

PiModel exact_pi(const CableDesign& design, double omega, double length, const ReductionOptions& opts) {
  if (!(length > 0.0)) throw InvalidInput("Pi extraction needs a positive cable length");
  const Matrix6c Z = build_z_matrix(design, omega);
  const Matrix6c Y = build_y_matrix(design, omega);
  const TerminalMatrix tm = terminal_solution(Z, Y, length, omega, opts);
  return positive_sequence_pi(eliminate_sheaths(tm, opts), omega, opts);
}

}  // namespace lfac
