#pragma once

#include <array>
#include <complex>
#include <vector>

#include "lfac/cable.hpp"
#include "lfac/sequence.hpp"

namespace lfac {

/// One exact evaluation of the positive-sequence Pi at omega.
/// y_shunt is the total shunt admittance (both terminals together).
struct ReferenceSample {
  double omega = 0.0;
  cd z_series;
  cd y_shunt;
};

/// Polynomial frequency model of a cable's positive-sequence Pi:
///   R(w) = r2 w^2 + r1 w + r0            X(w) = x2 w^2 + x1 w
///   G(w) = g4 w^4 + ... + g1 w + g0      B(w) = b2 w^2 + b1 w
/// R, X in ohms; G, B in siemens for the total shunt; w in rad/s.
struct PolyCableModel {
  double r2 = 0, r1 = 0, r0 = 0;
  double x2 = 0, x1 = 0;
  double b2 = 0, b1 = 0;
  double g4 = 0, g3 = 0, g2 = 0, g1 = 0, g0 = 0;
  double omega_min = 0, omega_max = 0;
  int n_samples = 0;

  double R(double w) const { return (r2 * w + r1) * w + r0; }
  double X(double w) const { return (x2 * w + x1) * w; }
  double G(double w) const { return (((g4 * w + g3) * w + g2) * w + g1) * w + g0; }
  double B(double w) const { return (b2 * w + b1) * w; }

  double dR(double w) const { return 2 * r2 * w + r1; }
  double dX(double w) const { return 2 * x2 * w + x1; }
  double dG(double w) const { return ((4 * g4 * w + 3 * g3) * w + 2 * g2) * w + g1; }
  double dB(double w) const { return 2 * b2 * w + b1; }

  double d2R(double) const { return 2 * r2; }
  double d2X(double) const { return 2 * x2; }
  double d2G(double w) const { return (12 * g4 * w + 6 * g3) * w + 2 * g2; }
  double d2B(double) const { return 2 * b2; }

  friend bool operator==(const PolyCableModel&, const PolyCableModel&) = default;
};

inline constexpr int kMaxModelCoefficients = 5;

/// n exact Pi evaluations on a uniform grid from omega_min to omega_max
/// (both included). Sampling is split over `workers` threads.
std::vector<ReferenceSample> sample_reference(const CableDesign& design, double omega_min, double omega_max,
                                              int n, int workers = 1, const ReductionOptions& opts = {});

/// Independent unweighted least-squares fits of the four curves.
PolyCableModel fit(const std::vector<ReferenceSample>& samples);

enum class FitParameter { R, X, G, B };
inline constexpr std::array<FitParameter, 4> kFitParameters = {FitParameter::R, FitParameter::X, FitParameter::G,
                                                               FitParameter::B};
const char* to_string(FitParameter p);

double evaluate(const PolyCableModel& m, FitParameter p, double omega);
double detailed_value(const ReferenceSample& s, FitParameter p);

struct FitErrorRow {
  FitParameter parameter = FitParameter::R;
  double largest_error = 0.0;         // approximate − detailed, in ohm or S
  double largest_relative_pct = 0.0;  // % of the largest |detailed| on the grid
  double frequency_hz = 0.0;          // where the largest error occurs
  double rms_relative_pct = 0.0;
};

struct FitReport {
  std::array<FitErrorRow, 4> rows;
  const FitErrorRow& row(FitParameter p) const { return rows[static_cast<int>(p)]; }
};

FitReport fit_report(const PolyCableModel& model, const std::vector<ReferenceSample>& samples);

}  // namespace lfac
