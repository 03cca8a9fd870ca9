#pragma once

#include <array>
#include <string>
#include <vector>

namespace flangecal {

/// One reported error row: x, y, z in mm, roll, pitch, yaw in degrees.
struct ReferenceRow {
  std::string setup;
  std::array<double, 6> values;
};

/// All-points hardware calibration errors per robot and scanner.
const std::vector<ReferenceRow>& hardware_all_points_errors();

/// Commercial sphere-based calibration with 4 and 16 pairs.
const std::vector<ReferenceRow>& sphere_calibration_errors();

/// Consumer-grade ToF scanner, all points.
const ReferenceRow& tof_all_points_error();

/// Converged iterative hardware bounds: (translation mm, rotation deg) per setup.
struct ConvergenceBound {
  std::string setup;
  double translation_mm;
  double rotation_deg;
};
const std::vector<ConvergenceBound>& hardware_convergence_bounds();

/// Fixed-width table with columns setup, x, y, z, roll, pitch, yaw.
std::string format_error_table(const std::vector<ReferenceRow>& rows);
std::string format_error_row(const ReferenceRow& row);

}  // namespace flangecal
