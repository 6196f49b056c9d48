#include "lfac/poly_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/QR>

#include "lfac/errors.hpp"

namespace lfac {
namespace {

// Least squares on columns omega^p for p in `powers`. Columns are scaled to
// unit max-norm before the QR solve.
Eigen::VectorXd least_squares(const std::vector<double>& omega, const std::vector<double>& values,
                              std::initializer_list<int> powers) {
  const Eigen::Index n = static_cast<Eigen::Index>(omega.size());
  const Eigen::Index k = static_cast<Eigen::Index>(powers.size());
  Eigen::MatrixXd A(n, k);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index c = 0;
    for (int p : powers) A(i, c++) = std::pow(omega[i], p);
    y(i) = values[i];
  }
  Eigen::VectorXd scale = A.cwiseAbs().colwise().maxCoeff().transpose();
  for (Eigen::Index c = 0; c < k; ++c) {
    if (scale(c) == 0.0) throw NumericalError("rank-deficient fit: all-zero design column");
    A.col(c) /= scale(c);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-13);
  if (qr.rank() < k) {
    std::ostringstream msg;
    msg << "rank-deficient normal equations (rank " << qr.rank() << " < " << k << "); degenerate frequency grid";
    throw NumericalError(msg.str());
  }
  return qr.solve(y).cwiseQuotient(scale);
}

}  // namespace

std::vector<ReferenceSample> sample_reference(const CableDesign& design, double omega_min, double omega_max, int n,
                                              int workers, const ReductionOptions& opts) {
  if (n < kMaxModelCoefficients)
    throw InvalidInput("need at least " + std::to_string(kMaxModelCoefficients) + " samples, got " + std::to_string(n));
  if (!(omega_min > 0.0)) throw InvalidInput("omega_min must be positive");
  if (!(omega_max > omega_min)) throw InvalidInput("omega_max must exceed omega_min");
  design.validate();

  std::vector<ReferenceSample> out(static_cast<std::size_t>(n));
  const double step = (omega_max - omega_min) / (n - 1);
  auto grid = [&](int i) { return i == n - 1 ? omega_max : omega_min + i * step; };

  auto work = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const double w = grid(i);
      try {
        const PiModel pi = exact_pi(design, w, opts);
        out[static_cast<std::size_t>(i)] = {w, pi.z_series, pi.y_shunt()};
      } catch (const NumericalError& e) {
        std::ostringstream msg;
        msg << e.what() << " (at omega = " << w << " rad/s)";
        throw NumericalError(msg.str());
      }
    }
  };

  workers = std::clamp(workers, 1, n);
  if (workers == 1) {
    work(0, n);
    return out;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  {
    std::vector<std::jthread> pool;
    const int chunk = (n + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
      const int begin = t * chunk, end = std::min(n, begin + chunk);
      pool.emplace_back([&, t, begin, end] {
        try {
          work(begin, end);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

PolyCableModel fit(const std::vector<ReferenceSample>& samples) {
  if (samples.size() < static_cast<std::size_t>(kMaxModelCoefficients))
    throw InvalidInput("too few samples for the quartic conductance model");
  std::vector<double> w, r, x, g, b;
  for (const auto& s : samples) {
    w.push_back(s.omega);
    r.push_back(s.z_series.real());
    x.push_back(s.z_series.imag());
    g.push_back(s.y_shunt.real());
    b.push_back(s.y_shunt.imag());
  }
  PolyCableModel m;
  const Eigen::VectorXd cr = least_squares(w, r, {2, 1, 0});
  const Eigen::VectorXd cx = least_squares(w, x, {2, 1});
  const Eigen::VectorXd cb = least_squares(w, b, {2, 1});
  const Eigen::VectorXd cg = least_squares(w, g, {4, 3, 2, 1, 0});
  m.r2 = cr(0), m.r1 = cr(1), m.r0 = cr(2);
  m.x2 = cx(0), m.x1 = cx(1);
  m.b2 = cb(0), m.b1 = cb(1);
  m.g4 = cg(0), m.g3 = cg(1), m.g2 = cg(2), m.g1 = cg(3), m.g0 = cg(4);
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  m.omega_min = *lo;
  m.omega_max = *hi;
  m.n_samples = static_cast<int>(samples.size());
  return m;
}

const char* to_string(FitParameter p) {
  switch (p) {
    case FitParameter::R: return "R";
    case FitParameter::X: return "X";
    case FitParameter::G: return "G";
    case FitParameter::B: return "B";
  }
  return "?";
}

double evaluate(const PolyCableModel& m, FitParameter p, double omega) {
  switch (p) {
    case FitParameter::R: return m.R(omega);
    case FitParameter::X: return m.X(omega);
    case FitParameter::G: return m.G(omega);
    case FitParameter::B: return m.B(omega);
  }
  return 0.0;
}

double detailed_value(const ReferenceSample& s, FitParameter p) {
  switch (p) {
    case FitParameter::R: return s.z_series.real();
    case FitParameter::X: return s.z_series.imag();
    case FitParameter::G: return s.y_shunt.real();
    case FitParameter::B: return s.y_shunt.imag();
  }
  return 0.0;
}

FitReport fit_report(const PolyCableModel& model, const std::vector<ReferenceSample>& samples) {
  if (samples.empty()) throw InvalidInput("fit report needs at least one sample");
  FitReport report;
  for (FitParameter p : kFitParameters) {
    double largest_abs = 0.0, largest_err = 0.0, at_omega = samples.front().omega, sum_sq = 0.0;
    for (const auto& s : samples) {
      const double detailed = detailed_value(s, p);
      const double err = evaluate(model, p, s.omega) - detailed;
      largest_abs = std::max(largest_abs, std::abs(detailed));
      sum_sq += err * err;
      if (std::abs(err) > std::abs(largest_err)) {
        largest_err = err;
        at_omega = s.omega;
      }
    }
    FitErrorRow& row = report.rows[static_cast<int>(p)];
    row.parameter = p;
    row.largest_error = largest_err;
    row.frequency_hz = at_omega / (2.0 * std::numbers::pi);
    const double norm = largest_abs > 0.0 ? 100.0 / largest_abs : 0.0;
    row.largest_relative_pct = largest_err * norm;
    row.rms_relative_pct = std::sqrt(sum_sq / static_cast<double>(samples.size())) * norm;
  }
  return report;
}

}  // namespace lfac
