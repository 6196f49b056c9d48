#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lfac/case_io.hpp"
#include "lfac/errors.hpp"
#include "lfac/format.hpp"
#include "lfac/opf.hpp"
#include "lfac/poly_fit.hpp"
#include "lfac/sequence.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lfac;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitParse = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIterationLimit = 4;

constexpr const char* kOutDirEnv = "LFAC_OUT_DIR";
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Settings {
  std::string out_dir;
  std::string format = "csv";
  int workers = 1;
  std::string solver_config;
  double tol = 0.0;
  double constr_viol_tol = 0.0;
  int max_iter = 0;
};

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParseError("--grid: '" + spec + "' is not start:stop:step");
    }
  }
  if (parts.size() != 3) throw ParseError("--grid: '" + spec + "' is not start:stop:step");
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (!(step > 0.0)) throw ParseError("--grid: step must be positive");
  if (!(stop >= start)) throw ParseError("--grid: stop must not be below start");
  const long n = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(n);
  for (long k = 0; k < n; ++k) out.push_back(std::round((start + k * step) * 1e9) / 1e9);
  return out;
}

OpfOptions solver_options(const Settings& s) {
  OpfOptions o;
  if (!s.solver_config.empty()) {
    std::ifstream in(s.solver_config);
    if (!in) throw ParseError(s.solver_config + ": cannot open");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ParseError(s.solver_config + ": " + e.what());
    }
    for (const auto& [key, value] : j.items()) {
      if (!value.is_number()) throw ParseError(s.solver_config + "." + key + ": expected a number");
      const double v = value.get<double>();
      if (key == "tol") o.ipm.tol = v;
      else if (key == "constr_viol_tol") o.ipm.constr_viol_tol = v;
      else if (key == "max_iterations") o.ipm.max_iterations = static_cast<int>(v);
      else if (key == "mu_init") o.ipm.mu_init = v;
      else if (key == "bound_push") o.ipm.bound_push = v;
      else if (key == "binding_tolerance") o.binding_tolerance = v;
      else if (key == "infeasibility_tolerance") o.infeasibility_tolerance = v;
      else throw ParseError(s.solver_config + "." + key + ": unknown solver option");
    }
  }
  if (s.tol > 0.0) o.ipm.tol = s.tol;
  if (s.constr_viol_tol > 0.0) o.ipm.constr_viol_tol = s.constr_viol_tol;
  if (s.max_iter > 0) o.ipm.max_iterations = s.max_iter;
  return o;
}

std::string output_dir(const Settings& s) {
  if (!s.out_dir.empty()) return s.out_dir;
  if (const char* env = std::getenv(kOutDirEnv)) return env;
  return {};
}

// Writes `body` to <dir>/<name> when an output directory is configured,
// otherwise to stdout.
template <class F>
void emit(const Settings& s, const std::string& name, F body) {
  const std::string dir = output_dir(s);
  if (dir.empty()) {
    body(std::cout);
    return;
  }
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  body(out);
  if (!out) throw Error("write to " + path.string() + " failed");
}

bool json_output(const Settings& s) { return s.format == "json"; }

int exit_code(OpfStatus status) {
  switch (status) {
    case OpfStatus::Optimal: return kExitOk;
    case OpfStatus::Infeasible: return kExitInfeasible;
    case OpfStatus::IterationLimit: return kExitIterationLimit;
    case OpfStatus::NumericalFailure: return kExitError;
  }
  return kExitError;
}

// ---------------------------------------------------------------------------

int cmd_cable_params(const Settings& s, const std::string& design_path, const std::vector<double>& hz,
                     double length_km) {
  CableDesign design = load_design(design_path);
  if (length_km > 0.0) design.length = length_km * 1e3;
  const double km = design.length / 1e3;
  json rows = json::array();
  std::ostringstream csv;
  csv << "frequency_hz,omega,R_ohm,X_ohm,G_S,B_S,R_ohm_per_km,X_ohm_per_km,G_S_per_km,B_S_per_km\n";
  for (double f : hz) {
    const double w = kTwoPi * f;
    const PiModel pi = exact_pi(design, w);
    const cd y = pi.y_shunt();
    const double vals[] = {pi.z_series.real(), pi.z_series.imag(), y.real(), y.imag()};
    csv << format_double(f) << ',' << format_double(w);
    for (double v : vals) csv << ',' << format_double(v);
    for (double v : vals) csv << ',' << format_double(v / km);
    csv << '\n';
    rows.push_back({{"frequency_hz", f},
                    {"omega", w},
                    {"R_ohm", vals[0]},
                    {"X_ohm", vals[1]},
                    {"G_S", vals[2]},
                    {"B_S", vals[3]},
                    {"R_ohm_per_km", vals[0] / km},
                    {"X_ohm_per_km", vals[1] / km},
                    {"G_S_per_km", vals[2] / km},
                    {"B_S_per_km", vals[3] / km}});
  }
  if (json_output(s))
    emit(s, "cable_params.json", [&](std::ostream& os) { os << json{{"design", design.name}, {"length_km", km}, {"rows", rows}}.dump(2) << '\n'; });
  else
    emit(s, "cable_params.csv", [&](std::ostream& os) { os << csv.str(); });
  return kExitOk;
}

void write_fit_report_csv(std::ostream& os, const FitReport& report) {
  os << "parameter,largest_error,largest_relative_pct,frequency_hz,rms_relative_pct\n";
  for (const FitErrorRow& r : report.rows)
    os << to_string(r.parameter) << ',' << format_double(r.largest_error) << ','
       << format_double(r.largest_relative_pct) << ',' << format_double(r.frequency_hz) << ','
       << format_double(r.rms_relative_pct) << '\n';
}

json fit_report_json(const FitReport& report) {
  json out = json::array();
  for (const FitErrorRow& r : report.rows)
    out.push_back({{"parameter", to_string(r.parameter)},
                   {"largest_error", r.largest_error},
                   {"largest_relative_pct", r.largest_relative_pct},
                   {"frequency_hz", r.frequency_hz},
                   {"rms_relative_pct", r.rms_relative_pct}});
  return out;
}

int cmd_fit(const Settings& s, const std::string& design_path, int n_samples, double omega_min, double omega_max,
            double length_km) {
  CableDesign design = load_design(design_path);
  if (length_km > 0.0) design.length = length_km * 1e3;
  const auto samples = sample_reference(design, omega_min, omega_max, n_samples, s.workers);
  const PolyCableModel model = fit(samples);
  const FitReport report = fit_report(model, samples);
  const json model_doc{{"design", design.name}, {"length_km", design.length / 1e3}, {"model", model_to_json(model)}};
  if (json_output(s)) {
    emit(s, "fit.json", [&](std::ostream& os) {
      json doc = model_doc;
      doc["report"] = fit_report_json(report);
      os << doc.dump(2) << '\n';
    });
    return kExitOk;
  }
  if (output_dir(s).empty()) {
    std::cout << model_doc.dump(2) << '\n';
    write_fit_report_csv(std::cout, report);
    return kExitOk;
  }
  emit(s, "fit_model.json", [&](std::ostream& os) { os << model_doc.dump(2) << '\n'; });
  emit(s, "fit_report.csv", [&](std::ostream& os) { write_fit_report_csv(os, report); });
  return kExitOk;
}

int cmd_solve(const Settings& s, const std::string& case_path) {
  FitSettings fs_;
  fs_.workers = s.workers;
  const Network net = load_case(case_path, fs_);
  const OpfSolution sol = solve_opf(net, solver_options(s));
  const json doc = solution_to_json(net, sol);

  if (output_dir(s).empty()) {
    if (json_output(s)) {
      std::cout << doc.dump(2) << '\n';
    } else {
      std::cout << "status,objective,total_loss,iterations\n"
                << to_string(sol.status) << ',' << format_double(sol.objective) << ','
                << format_double(sol.total_loss) << ',' << sol.iterations << '\n';
      write_subnetwork_csv(std::cout, net, sol);
      write_binding_table(std::cout, sol);
    }
  } else {
    emit(s, "solution.json", [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
    emit(s, "bus.csv", [&](std::ostream& os) { write_bus_csv(os, net, sol); });
    emit(s, "branch.csv", [&](std::ostream& os) { write_branch_csv(os, net, sol); });
    emit(s, "generator.csv", [&](std::ostream& os) { write_generator_csv(os, net, sol); });
    emit(s, "converter.csv", [&](std::ostream& os) { write_converter_csv(os, net, sol); });
    emit(s, "subnetwork.csv", [&](std::ostream& os) { write_subnetwork_csv(os, net, sol); });
    emit(s, "binding.txt", [&](std::ostream& os) { write_binding_table(os, sol); });
  }
  if (sol.status != OpfStatus::Optimal) {
    std::cerr << "lfac: " << to_string(sol.status) << ": " << sol.message << '\n';
    for (const auto& v : sol.most_violated)
      std::cerr << "  " << v.kind << ' ' << v.element << ' ' << format_double(v.violation) << '\n';
  }
  return exit_code(sol.status);
}

int cmd_sweep(const Settings& s, const std::string& case_path, const std::string& grid, const std::string& sub,
              bool cold) {
  const std::vector<double> hz = parse_grid(grid);
  FitSettings fs_;
  fs_.workers = s.workers;
  const Network net = load_case(case_path, fs_);
  const int index = sweep_subnetwork(net, sub);
  const auto rows = frequency_sweep(net, index, hz, solver_options(s), s.workers, !cold);
  if (json_output(s))
    emit(s, "sweep.json", [&](std::ostream& os) { os << sweep_to_json(rows).dump(2) << '\n'; });
  else
    emit(s, "sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, rows); });
  return kExitOk;
}

struct TransferFlags {
  std::string design;
  std::string grid = "0:60:0.1";
  std::vector<double> hz;
  double length_km = 0.0;
  double base_mva = 100.0;
  double base_kv = 0.0;
  double thermal_limit = 0.0;
  double angle_deg = 40.0;
  double v_min = 0.95, v_max = 1.05;
};

int cmd_max_transfer(const Settings& s, const TransferFlags& f) {
  CableDesign design = load_design(f.design);
  if (f.length_km > 0.0) design.length = f.length_km * 1e3;
  const std::vector<double> hz = f.hz.empty() ? parse_grid(f.grid) : f.hz;
  FitSettings fit_settings;
  const auto samples = sample_reference(design, fit_settings.omega_min, fit_settings.omega_max,
                                        fit_settings.n_samples, s.workers);
  MaxTransferSpec spec;
  spec.model = fit(samples);
  spec.base_mva = f.base_mva;
  spec.base_kv = f.base_kv > 0.0 ? f.base_kv : design.base_voltage() / 1e3;
  spec.thermal_limit = f.thermal_limit > 0.0 ? f.thermal_limit : design.thermal_rating / (f.base_mva * 1e6);
  spec.angle_limit = f.angle_deg * std::numbers::pi / 180.0;
  spec.v_min = f.v_min;
  spec.v_max = f.v_max;
  if (!(spec.base_kv > 0.0)) throw InvalidInput("max-transfer needs --base-kv or a design voltage");
  if (!(spec.thermal_limit > 0.0)) throw InvalidInput("max-transfer needs --thermal-limit or a design thermal rating");
  const auto rows = max_transfer_sweep(spec, hz, solver_options(s).ipm, s.workers);
  if (json_output(s))
    emit(s, "max_transfer.json", [&](std::ostream& os) { os << max_transfer_to_json(rows).dump(2) << '\n'; });
  else
    emit(s, "max_transfer.csv", [&](std::ostream& os) { write_max_transfer_csv(os, rows); });
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-dependent cable modelling and multi-frequency AC optimal power flow"};
  app.require_subcommand(1);
  app.fallthrough();
  Settings s;
  app.add_option("--out", s.out_dir, std::string("Output directory (default: $") + kOutDirEnv + ", else stdout)");
  app.add_option("--format", s.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--workers", s.workers, "Worker threads for sampling and sweeps")->check(CLI::PositiveNumber);
  app.add_option("--solver-config", s.solver_config, "JSON document with solver options")->check(CLI::ExistingFile);
  app.add_option("--tol", s.tol, "Scaled KKT tolerance")->check(CLI::PositiveNumber);
  app.add_option("--constr-viol-tol", s.constr_viol_tol, "Constraint violation tolerance")->check(CLI::PositiveNumber);
  app.add_option("--max-iter", s.max_iter, "Interior-point iteration limit")->check(CLI::PositiveNumber);

  std::string design, case_path, grid = "0:60:0.1", sub;
  std::vector<double> hz;
  double length_km = 0.0;

  auto* cp = app.add_subcommand("cable-params", "Exact positive-sequence Pi parameters of a cable design");
  cp->add_option("--design", design, "Cable design file")->required()->check(CLI::ExistingFile);
  cp->add_option("--freq-hz", hz, "Frequencies in Hz")->delimiter(',');
  cp->add_option("--length-km", length_km, "Override the design length")->check(CLI::PositiveNumber);

  int n_samples = 500;
  double omega_min = 0.001, omega_max = 120.0 * std::numbers::pi;
  auto* ft = app.add_subcommand("fit", "Fit the polynomial frequency model and report its errors");
  ft->add_option("--design", design, "Cable design file")->required()->check(CLI::ExistingFile);
  ft->add_option("--samples", n_samples, "Number of fitting samples")->check(CLI::Range(6, 1000000));
  ft->add_option("--omega-min", omega_min, "Lower end of the fit range, rad/s")->check(CLI::PositiveNumber);
  ft->add_option("--omega-max", omega_max, "Upper end of the fit range, rad/s")->check(CLI::PositiveNumber);
  ft->add_option("--length-km", length_km, "Override the design length")->check(CLI::PositiveNumber);

  auto* sv = app.add_subcommand("solve", "Solve the multi-frequency OPF of a case");
  sv->add_option("--case", case_path, "Case file")->required()->check(CLI::ExistingFile);

  bool cold = false;
  auto* sw = app.add_subcommand("sweep", "Fixed-frequency OPF over a frequency grid");
  sw->add_option("--case", case_path, "Case file")->required()->check(CLI::ExistingFile);
  sw->add_option("--grid", grid, "start:stop:step in Hz (0 Hz solves in dc mode)");
  sw->add_option("--subnetwork", sub, "Subnetwork to sweep (default: first variable one)");
  sw->add_flag("--cold", cold, "Flat start at every grid point");

  TransferFlags tf;
  auto* mt = app.add_subcommand("max-transfer", "Maximum active power over a single cable");
  mt->add_option("--design", tf.design, "Cable design file")->required()->check(CLI::ExistingFile);
  mt->add_option("--grid", tf.grid, "start:stop:step in Hz");
  mt->add_option("--freq-hz", tf.hz, "Explicit frequencies in Hz, overrides --grid")->delimiter(',');
  mt->add_option("--length-km", tf.length_km, "Override the design length")->check(CLI::PositiveNumber);
  mt->add_option("--base-mva", tf.base_mva, "System base")->check(CLI::PositiveNumber);
  mt->add_option("--base-kv", tf.base_kv, "Voltage base (default: design nominal voltage)")->check(CLI::PositiveNumber);
  mt->add_option("--thermal-limit", tf.thermal_limit, "Thermal limit in pu (default: design rating)")
      ->check(CLI::PositiveNumber);
  mt->add_option("--angle-deg", tf.angle_deg, "Angle difference limit")->check(CLI::PositiveNumber);
  mt->add_option("--vmin", tf.v_min, "Destination voltage lower bound");
  mt->add_option("--vmax", tf.v_max, "Destination voltage upper bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitParse;
  }

  try {
    if (*cp) return cmd_cable_params(s, design, hz, length_km);
    if (*ft) return cmd_fit(s, design, n_samples, omega_min, omega_max, length_km);
    if (*sv) return cmd_solve(s, case_path);
    if (*sw) return cmd_sweep(s, case_path, grid, sub, cold);
    if (*mt) return cmd_max_transfer(s, tf);
  } catch (const ParseError& e) {
    std::cerr << "lfac: parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "lfac: error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
