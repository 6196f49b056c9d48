#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include <json.hpp>

#include "lfac/network.hpp"

namespace lfac {

inline constexpr int kCaseFormatVersion = 1;

/// Sampling used when a cable branch references a design instead of
/// embedding coefficients.
struct FitSettings {
  double omega_min = 0.001;
  double omega_max = 120.0 * 3.14159265358979323846;
  int n_samples = 500;
  int workers = 1;
};

CableDesign design_from_json(const nlohmann::json& j, const std::string& location = "design");
nlohmann::json design_to_json(const CableDesign& design);
CableDesign load_design(const std::filesystem::path& path);

nlohmann::json model_to_json(const PolyCableModel& model);
PolyCableModel model_from_json(const nlohmann::json& j, const std::string& location = "model");

/// Builds and validates a Network. Cable branches that name a design and a
/// length are fitted here; identical (design, length) pairs share one fit.
Network parse_case(const nlohmann::json& doc, const FitSettings& fit = {});
Network load_case(const std::filesystem::path& path, const FitSettings& fit = {});

/// Inverse of parse_case. Cable branches carry their fitted coefficients,
/// so reloading does not refit.
nlohmann::json case_to_json(const Network& net);
void save_case(const Network& net, const std::filesystem::path& path);

/// Per-unit branch parameters with one row per directed edge, evaluated at
/// each subnetwork's frequency in `hz` (keyed by subnetwork id; fixed and dc
/// subnetworks use their own setting when absent).
void write_branch_parameters_csv(std::ostream& os, const Network& net, const std::map<std::string, double>& hz = {});

}  // namespace lfac
