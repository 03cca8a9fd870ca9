#include "flangecal/reference_tables.hpp"

#include <cstdio>

namespace flangecal {

const std::vector<ReferenceRow>& hardware_all_points_errors() {
  static const std::vector<ReferenceRow> rows{
      {"UR5 & PhoXi M", {11.60, 2.81, 5.55, 0.49, -0.89, -0.47}},
      {"UR10e & PhoXi M", {0.60, 1.75, -0.41, 0.10, -0.04, -0.23}},
      {"Franka Emika & PhoXi M", {4.34, -4.06, -0.13, -0.30, -0.34, -0.07}},
      {"AUBO i5 & PhoXi S", {-0.26, -0.27, -0.35, 0.14, 0.04, 0.01}},
  };
  return rows;
}

const std::vector<ReferenceRow>& sphere_calibration_errors() {
  static const std::vector<ReferenceRow> rows{
      {"4 pairs", {-1.94, -0.90, -0.86, -0.07, 0.04, -0.10}},
      {"16 pairs", {-0.98, -1.01, -0.83, -0.07, 0.09, -0.11}},
  };
  return rows;
}

const ReferenceRow& tof_all_points_error() {
  static const ReferenceRow row{"UR10e & Azure Kinect DK", {-11.11, 3.90, 7.15, -0.15, 0.92, 1.56}};
  return row;
}

const std::vector<ConvergenceBound>& hardware_convergence_bounds() {
  static const std::vector<ConvergenceBound> rows{
      {"UR5 & PhoXi M", 0.28, 0.25},
      {"UR10e & PhoXi M", 0.28, 0.25},
      {"AUBO i5 & PhoXi S", 0.28, 0.25},
      {"Franka Emika & PhoXi M", 0.4, 0.6},
  };
  return rows;
}

std::string format_error_row(const ReferenceRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-26s %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f", row.setup.c_str(), row.values[0],
                row.values[1], row.values[2], row.values[3], row.values[4], row.values[5]);
  return buf;
}

std::string format_error_table(const std::vector<ReferenceRow>& rows) {
  char head[256];
  std::snprintf(head, sizeof head, "%-26s %8s %8s %8s %8s %8s %8s", "setup", "x(mm)", "y(mm)", "z(mm)", "roll(deg)",
                "pitch(deg)", "yaw(deg)");
  std::string out = head;
  out += '\n';
  for (const auto& r : rows) out += format_error_row(r) + '\n';
  return out;
}

}  // namespace flangecal
