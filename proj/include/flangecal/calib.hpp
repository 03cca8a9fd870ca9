#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "flangecal/icp.hpp"
#include "flangecal/rigid_fit.hpp"

namespace flangecal {

/// Scores a candidate camera->base estimate against fixed verification data.
using ErrorEvaluator = std::function<IcpErrorMetric(const RigidTransform&)>;

/// Closed-form evaluator for simulation: H_hat^-1 * H_true.
ErrorEvaluator simulation_evaluator(const RigidTransform& H_true);

/// Cloud evaluator: registers the measured verification cloud against the prediction.
ErrorEvaluator cloud_evaluator(const RigidTransform& robot_pose_v, const PointCloud& P_true_flan,
                               const PointCloud& P_v_cam, const IcpParams& params);

struct CalibConfig {
  double e_required = 0.1;  // mm
  int k_max = 100;
  CostKind cost_kind = CostKind::translation_norm();
  /// Literal in-place substitution loop instead of best-of-four.
  bool sequential = false;
  bool with_scale = false;
};

struct HistoryEntry {
  int iteration = 0;
  bool accepted = false;
  double cost = 0.0;
  std::optional<PoseError> error;
};

struct CalibState {
  std::array<SamplePair, 4> pool;
  std::array<long, 4> pool_ids{0, 1, 2, 3};
  RigidTransform H_optimal;
  IcpErrorMetric e_optimal = IcpErrorMetric::failure();
  double cost = 0.0;
  std::vector<HistoryEntry> history;
};

struct CalibOutcome {
  RigidTransform H_optimal;
  RigidTransform H_compensated;
  IcpErrorMetric e_optimal = IcpErrorMetric::failure();
  double cost = 0.0;
  int iterations_used = 0;
  std::array<long, 4> pool_ids{};
  std::vector<HistoryEntry> history;
};

/// Fits the first pool and scores it. Throws DegenerateConfiguration for a coplanar pool.
CalibState init(const std::array<SamplePair, 4>& pairs4, const ErrorEvaluator& eval, const CalibConfig& cfg);

/// Tries the new pair in each slot and keeps the best substitution when it strictly lowers
/// the cost. Fits that fail during a trial cost +inf.
CalibState step(const CalibState& state, const SamplePair& new_pair, const ErrorEvaluator& eval,
                const CalibConfig& cfg, long new_id = -1);

/// Initializes from the first four pairs, then consumes pairs until the cost reaches
/// e_required or k_max new pairs were used. Throws StreamExhausted for fewer than four pairs.
CalibOutcome run(const std::vector<SamplePair>& stream, const ErrorEvaluator& eval, const CalibConfig& cfg);

/// H_optimal * delta. Throws CannotCompensate for a failed metric.
RigidTransform compensate(const RigidTransform& H_optimal, const IcpErrorMetric& e_optimal);

}  // namespace flangecal
