#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flangecal/calib.hpp"
#include "flangecal/cloud.hpp"
#include "flangecal/flange_sim.hpp"
#include "flangecal/se3.hpp"
#include "flangecal/weld_sim.hpp"

namespace flangecal {

/// Meters per unit for "m" or "mm"; throws UnitMismatch otherwise.
double unit_scale(const std::string& units);

/// Shortest locale-independent text for a double at the given significant digits.
std::string format_double(double v, int precision = 9);

/// ASCII PLY (x, y, z vertex properties) or CSV with an "x,y,z" header, picked by extension.
/// A "units=mm" or "units=m" comment in the file is honoured; when `expected_units` is given
/// and the file declares something else, UnitMismatch is thrown. Values end up in meters.
PointCloud read_cloud(const std::string& path, const std::optional<std::string>& expected_units = std::nullopt);

/// Writes 9 significant digits in the requested units, declaring them in a comment.
void write_cloud(const std::string& path, const PointCloud& cloud, const std::string& units = "m",
                 const std::vector<std::string>& comments = {});

struct PoseRecord {
  RigidTransform pose;
  bool has_quaternion = true;
};

struct ManifestEntry {
  std::string cloud_file;  // as written, relative to the manifest directory
  RigidTransform robot_pose;
};

struct DatasetManifest {
  int version = 1;
  std::string units = "m";
  FlangeModel flange;
  std::vector<ManifestEntry> pairs;
  ManifestEntry verification;
  std::optional<RigidTransform> ground_truth;
  std::string base_dir;

  std::string resolve(const std::string& file) const;
};

/// Loads and validates a version-1 manifest, converting poses to meters. Throws SchemaError on
/// structural problems or missing files.
DatasetManifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const DatasetManifest& m);

struct CalibResults {
  RigidTransform H_optimal;
  RigidTransform H_compensated;
  std::optional<PoseError> error;  // absent when the metric failed
  std::optional<double> cost;      // absent means +inf
  int iterations_used = 0;
  std::string cost_kind = "translation";
};

void write_results(const std::string& path, const CalibResults& r);
CalibResults read_results(const std::string& path);

/// 4x4 row-major matrix from JSON text or a results file ("H_optimal" / "H_compensated" / "H").
RigidTransform read_transform(const std::string& path, const std::string& key = "H_compensated");
void write_transform(const std::string& path, const RigidTransform& t);

/// Error transform stored with key "delta"; throws SchemaError when the file marks it failed.
IcpErrorMetric read_error(const std::string& path);
void write_error(const std::string& path, const IcpErrorMetric& e);

/// Calibration history: iteration, accepted, cost, dx, dy, dz, droll, dpitch, dyaw.
void write_history_csv(const std::string& path, const std::vector<HistoryEntry>& history,
                       const std::string& comment);

void write_sweep_csv(const std::string& path, const SweepResult& r, const std::string& comment);
void write_trace_csv(const std::string& path, const SweepResult& r, const std::string& comment);

/// Per-step weld trace: t, P_r, P_s, P_t, delta along t_s and n_s, omega.
void write_weld_csv(const std::string& path, const WeldTrace& trace, const std::string& comment);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

}  // namespace flangecal
