#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "lfac/ipm.hpp"
#include "lfac/network.hpp"

namespace lfac {

// ---------------------------------------------------------------------------
// Directed-edge power flow with derivatives
// ---------------------------------------------------------------------------

/// Local variables of one directed edge flow.
enum EdgeVar { kVo = 0, kVt = 1, kThetaO = 2, kThetaT = 3, kOmega = 4 };

struct EdgeFlow {
  double p = 0.0, q = 0.0;
  std::array<double, 5> dp{}, dq{};                    // d/d(Vo, Vt, theta_o, theta_t, omega)
  std::array<std::array<double, 5>, 5> hp{}, hq{};     // symmetric
};

/// Active and reactive power leaving the origin of `edge` into its branch.
/// Omega derivatives are zero in dc mode.
EdgeFlow edge_flow(const Network& net, const DirectedEdge& edge, double v_o, double v_t, double theta_o,
                   double theta_t, double omega, bool dc);

// ---------------------------------------------------------------------------
// OPF
// ---------------------------------------------------------------------------

enum class OpfStatus { Optimal, Infeasible, IterationLimit, NumericalFailure };
const char* to_string(OpfStatus s);

struct OpfOptions {
  IpmOptions ipm;
  bool certify_infeasibility = true;  // elastic phase-1 when the main solve fails
  double binding_tolerance = 1e-5;    // relative distance to a bound counted as binding
  double infeasibility_tolerance = 1e-6;
};

struct BindingConstraint {
  std::string kind;     // "v_max", "thermal", "angle", "pg_min", "omega_min", ...
  std::string element;  // bus / branch / generator / converter / subnetwork id
  double multiplier = 0.0;
};

struct ViolatedConstraint {
  std::string kind;
  std::string element;
  double violation = 0.0;
};

struct OpfSolution {
  OpfStatus status = OpfStatus::NumericalFailure;
  std::string message;
  double objective = 0.0;
  std::vector<double> v, theta;            // per bus
  std::vector<double> pg, qg;              // per generator
  std::vector<double> conv_p_i, conv_p_j;  // per converter terminal
  std::vector<double> conv_q_i, conv_q_j;
  std::vector<double> omega;               // per subnetwork, rad/s (0 for dc)
  std::vector<double> frequency_hz;        // per subnetwork
  std::vector<DirectedEdge> edges;
  std::vector<double> edge_p, edge_q;      // per directed edge
  double total_loss = 0.0;                 // Σ generation − Σ load, pu
  std::vector<BindingConstraint> binding;
  // Infeasibility diagnostics.
  double elastic_total = 0.0;              // minimum total balance slack (phase 1)
  double max_violation = 0.0;
  std::vector<ViolatedConstraint> most_violated;
  KktResiduals kkt, kkt_scaled;
  int iterations = 0;
  Eigen::VectorXd x;                       // raw solver vector for warm starts
};

/// The OPF as a generic NLP over [V, theta, pg, qg, converter (p, q_i, q_j),
/// omega of variable subnetworks, cost epigraph variables], flat start.
std::unique_ptr<NlpProblem> make_opf_problem(const Network& net);

/// Solves the multi-frequency AC OPF. Fixed subnetworks run at their
/// frequency, variable ones carry omega as a decision variable started at
/// its upper bound, dc ones use the dc branch limits. `warm` (a previous
/// solution on the same network structure) replaces the flat start.
OpfSolution solve_opf(const Network& net, const OpfOptions& options = {}, const OpfSolution* warm = nullptr);

/// Same as solve_opf; requires at least one variable-frequency subnetwork.
OpfSolution variable_frequency_solve(const Network& net, const OpfOptions& options = {});

/// Copy of `net` with subnetwork `index` fixed at `hz` (dc when hz == 0).
Network with_fixed_frequency(const Network& net, int index, double hz);

struct SweepRow {
  double hz = 0.0;
  OpfStatus status = OpfStatus::NumericalFailure;
  double objective = 0.0;
  double loss = 0.0;
  std::string message;
};

/// One fixed-frequency solve per grid point for subnetwork `index`. Points
/// are split into contiguous chunks, one per worker, each warm-started from
/// its previous point. Rows come back in grid order.
std::vector<SweepRow> frequency_sweep(const Network& net, int index, const std::vector<double>& hz_grid,
                                      const OpfOptions& options = {}, int workers = 1, bool warm_start = true);

/// Index of the first variable-frequency subnetwork, or of the subnetwork
/// named `id` when given.
int sweep_subnetwork(const Network& net, const std::string& id = "");

// ---------------------------------------------------------------------------
// Single-cable maximum transfer
// ---------------------------------------------------------------------------

enum class TransferRegime { Angle, ThermalReactive, Thermal, Infeasible };
const char* to_string(TransferRegime r);

struct MaxTransferSpec {
  PolyCableModel model;
  double base_kv = 230.0;
  double base_mva = 100.0;
  double thermal_limit = 5.25;  // pu
  double angle_limit = 40.0 * 3.14159265358979323846 / 180.0;
  double v_origin = 1.0;
  double v_min = 0.95, v_max = 1.05;
};

struct MaxTransferResult {
  double hz = 0.0;
  IpmStatus status = IpmStatus::NumericalFailure;
  double p_origin = 0.0, q_origin = 0.0;
  double p_dest = 0.0, q_dest = 0.0;
  double v_dest = 0.0, theta_dest = 0.0;
  double loss = 0.0;
  TransferRegime regime = TransferRegime::Infeasible;
  Eigen::VectorXd x;
};

/// Maximum origin active power over one cable with V_o and theta_o fixed.
/// hz == 0 evaluates the dc limits.
MaxTransferResult max_transfer(const MaxTransferSpec& spec, double hz, const IpmOptions& options = {},
                               const MaxTransferResult* warm = nullptr);

std::vector<MaxTransferResult> max_transfer_sweep(const MaxTransferSpec& spec, const std::vector<double>& hz_grid,
                                                  const IpmOptions& options = {}, int workers = 1);

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

nlohmann::json solution_to_json(const Network& net, const OpfSolution& s);
nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows);
nlohmann::json max_transfer_to_json(const std::vector<MaxTransferResult>& rows);

void write_bus_csv(std::ostream& os, const Network& net, const OpfSolution& s);
void write_branch_csv(std::ostream& os, const Network& net, const OpfSolution& s);
void write_generator_csv(std::ostream& os, const Network& net, const OpfSolution& s);
void write_converter_csv(std::ostream& os, const Network& net, const OpfSolution& s);
void write_subnetwork_csv(std::ostream& os, const Network& net, const OpfSolution& s);
void write_binding_table(std::ostream& os, const OpfSolution& s);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
void write_max_transfer_csv(std::ostream& os, const std::vector<MaxTransferResult>& rows);

}  // namespace lfac
