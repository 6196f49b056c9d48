#pragma once

#include <cmath>
#include <complex>
#include <string>

#include "lfac/cable.hpp"
#include "lfac/case_io.hpp"

namespace lfac::test {

inline std::string data_path(const std::string& rel) { return std::string(LFAC_DATA_DIR) + "/" + rel; }

inline CableDesign design_230kv() { return load_design(data_path("designs/cable_230kv_135km.json")); }
inline CableDesign design_138kv() { return load_design(data_path("designs/cable_138kv_22km.json")); }

inline double rel_err(std::complex<double> a, std::complex<double> b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}
inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace lfac::test
