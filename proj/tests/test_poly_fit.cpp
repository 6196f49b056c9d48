#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <doctest.h>

#include "lfac/errors.hpp"
#include "lfac/poly_fit.hpp"
#include "support.hpp"

using namespace lfac;
using std::numbers::pi;

namespace {

const double kOmegaMax = 120 * pi;

std::vector<ReferenceSample> model_samples(const PolyCableModel& m, double lo, double hi, int n) {
  std::vector<ReferenceSample> out;
  for (int i = 0; i < n; ++i) {
    const double w = lo + (hi - lo) * i / (n - 1);
    out.push_back({w, cd(m.R(w), m.X(w)), cd(m.G(w), m.B(w))});
  }
  return out;
}

PolyCableModel synthetic_model() {
  PolyCableModel m;
  m.r2 = 3e-5, m.r1 = -2e-3, m.r0 = 1.5;
  m.x2 = 1e-4, m.x1 = 0.1;
  m.b2 = 2e-8, m.b1 = 2e-5;
  m.g4 = 2e-13, m.g3 = -1e-10, m.g2 = 3e-8, m.g1 = -1e-6, m.g0 = 3e-5;
  return m;
}

double coefficient_distance(const PolyCableModel& a, const PolyCableModel& b) {
  const double av[] = {a.r2, a.r1, a.r0, a.x2, a.x1, a.b2, a.b1, a.g4, a.g3, a.g2, a.g1, a.g0};
  const double bv[] = {b.r2, b.r1, b.r0, b.x2, b.x1, b.b2, b.b1, b.g4, b.g3, b.g2, b.g1, b.g0};
  double worst = 0.0;
  for (int i = 0; i < 12; ++i) worst = std::max(worst, test::rel_err(av[i], bv[i]));
  return worst;
}

}  // namespace

TEST_CASE("sampling grid and argument checks") {
  const CableDesign d = test::design_138kv();
  CHECK_THROWS_AS(sample_reference(d, 0.001, kOmegaMax, 2), InvalidInput);
  CHECK_THROWS_AS(sample_reference(d, 0.0, kOmegaMax, 10), InvalidInput);
  CHECK_THROWS_AS(sample_reference(d, 5.0, 1.0, 10), InvalidInput);
  const auto s = sample_reference(d, 0.001, kOmegaMax, 7);
  REQUIRE(s.size() == 7);
  CHECK(s.front().omega == 0.001);
  CHECK(s.back().omega == kOmegaMax);
  std::vector<ReferenceSample> few(s.begin(), s.begin() + 3);
  CHECK_THROWS_AS(fit(few), InvalidInput);
}

TEST_CASE("reference samples equal fresh single-frequency reductions") {
  const CableDesign d = test::design_230kv();
  const auto serial = sample_reference(d, 0.001, kOmegaMax, 500, 1);
  const auto parallel = sample_reference(d, 0.001, kOmegaMax, 500, 4);
  REQUIRE(serial.size() == 500);
  REQUIRE(parallel.size() == 500);
  for (std::size_t i = 0; i < serial.size(); i += 37) {
    const PiModel p = exact_pi(d, serial[i].omega);
    CHECK(serial[i].z_series == p.z_series);
    CHECK(serial[i].y_shunt == p.y_shunt());
  }
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].omega == parallel[i].omega);
    CHECK(serial[i].z_series == parallel[i].z_series);
    CHECK(serial[i].y_shunt == parallel[i].y_shunt);
  }
}

TEST_CASE("model-class data is recovered exactly") {
  const PolyCableModel truth = synthetic_model();
  const auto samples = model_samples(truth, 0.001, kOmegaMax, 200);
  const PolyCableModel m = fit(samples);
  CHECK(coefficient_distance(m, truth) < 1e-10);
  const FitReport rep = fit_report(m, samples);
  for (FitParameter p : kFitParameters) {
    CAPTURE(to_string(p));
    CHECK(std::abs(rep.row(p).largest_relative_pct) < 1e-8);
    CHECK(std::abs(rep.row(p).rms_relative_pct) < 1e-8);
  }
}

TEST_CASE("constant column is omitted for X and B") {
  PolyCableModel truth = synthetic_model();
  auto samples = model_samples(truth, 0.001, kOmegaMax, 50);
  for (auto& s : samples) s.z_series += cd(0.0, 5.0);  // offset X cannot absorb
  const PolyCableModel m = fit(samples);
  CHECK(test::rel_err(m.r0, truth.r0) < 1e-10);
  CHECK(std::abs(m.X(0.0)) == 0.0);
  CHECK(std::abs(m.B(0.0)) == 0.0);
}

TEST_CASE("degenerate grids are rejected") {
  std::vector<ReferenceSample> same(10, ReferenceSample{1.0, cd(1.0, 1.0), cd(1e-6, 1e-5)});
  CHECK_THROWS_AS(fit(same), NumericalError);
}

TEST_CASE("residuals are orthogonal to the design columns") {
  const CableDesign d = test::design_230kv();
  const auto samples = sample_reference(d, 0.001, kOmegaMax, 500);
  const PolyCableModel m = fit(samples);
  struct Curve {
    FitParameter p;
    std::vector<int> powers;
  };
  const Curve curves[] = {{FitParameter::R, {2, 1, 0}},
                          {FitParameter::X, {2, 1}},
                          {FitParameter::G, {4, 3, 2, 1, 0}},
                          {FitParameter::B, {2, 1}}};
  for (const Curve& c : curves) {
    CAPTURE(to_string(c.p));
    const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
    Eigen::VectorXd y(n), r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      y(i) = detailed_value(samples[i], c.p);
      r(i) = evaluate(m, c.p, samples[i].omega) - y(i);
    }
    for (int p : c.powers) {
      Eigen::VectorXd a(n);
      for (Eigen::Index i = 0; i < n; ++i) a(i) = std::pow(samples[i].omega, p);
      CHECK(std::abs(a.dot(r)) <= 1e-8 * a.norm() * y.norm());
    }
  }
}

TEST_CASE("adding samples of the fitted polynomial leaves the fit unchanged") {
  const CableDesign d = test::design_138kv();
  auto samples = sample_reference(d, 0.001, kOmegaMax, 100);
  const PolyCableModel m = fit(samples);
  const auto extra = model_samples(m, 0.5, 300.0, 40);
  samples.insert(samples.end(), extra.begin(), extra.end());
  const PolyCableModel refit = fit(samples);
  CHECK(coefficient_distance(refit, m) < 1e-10);
}

TEST_CASE("fit report conventions") {
  std::vector<ReferenceSample> s = {{1.0, cd(2.0, 1.0), cd(0.0, 1.0)}, {2.0, cd(4.0, 2.0), cd(0.0, 2.0)}};
  PolyCableModel m;
  m.r1 = 1.0;  // R(w) = w: errors -1 and -2, largest detailed |R| = 4
  const FitReport rep = fit_report(m, s);
  const FitErrorRow& r = rep.row(FitParameter::R);
  CHECK(r.largest_error == -2.0);
  CHECK(r.largest_relative_pct == doctest::Approx(-50.0));
  CHECK(r.frequency_hz == doctest::Approx(2.0 / (2 * pi)));
  CHECK(r.rms_relative_pct == doctest::Approx(100.0 * std::sqrt((1.0 + 4.0) / 2.0) / 4.0));
  CHECK_THROWS_AS(fit_report(m, {}), InvalidInput);
}

TEST_CASE("shipped designs: largest errors at grid endpoints") {
  for (const CableDesign& d : {test::design_230kv(), test::design_138kv()}) {
    CAPTURE(d.name);
    const auto samples = sample_reference(d, 0.001, kOmegaMax, 500);
    const PolyCableModel m = fit(samples);
    const FitReport rep = fit_report(m, samples);
    const double f_lo = samples.front().omega / (2 * pi), f_hi = samples.back().omega / (2 * pi);
    for (FitParameter p : kFitParameters) {
      CAPTURE(to_string(p));
      const FitErrorRow& row = rep.row(p);
      const bool at_endpoint = row.frequency_hz == f_lo || row.frequency_hz == f_hi;
      CHECK(at_endpoint);
      CHECK(std::abs(row.rms_relative_pct) <= std::abs(row.largest_relative_pct));
    }
  }
}

namespace {

void check_fitted_conductance_nonnegative(const CableDesign& d) {
  const auto samples = sample_reference(d, 0.001, kOmegaMax, 500);
  const PolyCableModel m = fit(samples);
  double lowest = m.G(samples.front().omega);
  double where = samples.front().omega;
  for (const auto& s : samples)
    if (m.G(s.omega) < lowest) lowest = m.G(s.omega), where = s.omega;
  CAPTURE(where / (2 * pi));
  CHECK(lowest >= 0.0);
}

}  // namespace

TEST_CASE("fitted conductance is nonnegative: 138 kV, 22 km") { check_fitted_conductance_nonnegative(test::design_138kv()); }

TEST_CASE("fitted conductance is nonnegative: 230 kV, 135 km") { check_fitted_conductance_nonnegative(test::design_230kv()); }

TEST_CASE("22 km cable fit accuracy") {
  const CableDesign d = test::design_138kv();
  const auto samples = sample_reference(d, 0.001, kOmegaMax, 500);
  const FitReport rep = fit_report(fit(samples), samples);
  CHECK(std::abs(rep.row(FitParameter::R).largest_relative_pct) <= 0.5);
  CHECK(rep.row(FitParameter::G).frequency_hz < 0.01);
  CHECK(rep.row(FitParameter::B).frequency_hz == doctest::Approx(60.0));
}
