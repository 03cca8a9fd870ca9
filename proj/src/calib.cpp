#include "flangecal/calib.hpp"

#include <limits>

#include "flangecal/errors.hpp"

namespace flangecal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Trial {
  RigidTransform H;
  IcpErrorMetric e = IcpErrorMetric::failure();
  double cost = kInf;
};

Trial evaluate_pool(const std::array<SamplePair, 4>& pool, const ErrorEvaluator& eval, const CalibConfig& cfg) {
  Trial t;
  try {
    t.H = fit_rigid(std::vector<SamplePair>(pool.begin(), pool.end()), cfg.with_scale).transform;
  } catch (const DegenerateConfiguration&) {
    return t;
  }
  t.e = eval(t.H);
  t.cost = cost(t.e, cfg.cost_kind);
  return t;
}

HistoryEntry entry(int it, bool accepted, const CalibState& s) {
  HistoryEntry h{it, accepted, s.cost, std::nullopt};
  if (!s.e_optimal.failed()) h.error = s.e_optimal.pose_error();
  return h;
}

}  // namespace

ErrorEvaluator simulation_evaluator(const RigidTransform& H_true) {
  return [H_true](const RigidTransform& H_hat) { return simulation_error(H_hat, H_true); };
}

ErrorEvaluator cloud_evaluator(const RigidTransform& robot_pose_v, const PointCloud& P_true_flan,
                               const PointCloud& P_v_cam, const IcpParams& params) {
  return [=](const RigidTransform& H_hat) {
    return calibration_error(H_hat, robot_pose_v, P_true_flan, P_v_cam, params);
  };
}

CalibState init(const std::array<SamplePair, 4>& pairs4, const ErrorEvaluator& eval, const CalibConfig& cfg) {
  CalibState s;
  s.pool = pairs4;
  s.H_optimal = fit_rigid(std::vector<SamplePair>(pairs4.begin(), pairs4.end()), cfg.with_scale).transform;
  s.e_optimal = eval(s.H_optimal);
  s.cost = cost(s.e_optimal, cfg.cost_kind);
  s.history.push_back(entry(0, true, s));
  return s;
}

CalibState step(const CalibState& state, const SamplePair& new_pair, const ErrorEvaluator& eval,
                const CalibConfig& cfg, long new_id) {
  CalibState s = state;
  const int it = s.history.empty() ? 1 : s.history.back().iteration + 1;
  bool accepted = false;

  if (cfg.sequential) {
    for (int i = 0; i < 4; ++i) {
      auto pool = s.pool;
      pool[i] = new_pair;
      Trial t = evaluate_pool(pool, eval, cfg);
      if (t.cost < s.cost) {
        s.pool = pool;
        s.pool_ids[i] = new_id;
        s.H_optimal = t.H;
        s.e_optimal = t.e;
        s.cost = t.cost;
        accepted = true;
      }
    }
  } else {
    int best_slot = -1;
    Trial best;
    best.cost = s.cost;
    for (int i = 0; i < 4; ++i) {
      auto pool = s.pool;
      pool[i] = new_pair;
      Trial t = evaluate_pool(pool, eval, cfg);
      if (t.cost < best.cost) {
        best = t;
        best_slot = i;
      }
    }
    if (best_slot >= 0) {
      s.pool[best_slot] = new_pair;
      s.pool_ids[best_slot] = new_id;
      s.H_optimal = best.H;
      s.e_optimal = best.e;
      s.cost = best.cost;
      accepted = true;
    }
  }
  s.history.push_back(entry(it, accepted, s));
  return s;
}

CalibOutcome run(const std::vector<SamplePair>& stream, const ErrorEvaluator& eval, const CalibConfig& cfg) {
  if (stream.size() < 4) throw StreamExhausted("need at least four pairs to initialize");
  if (!(cfg.e_required > 0) || cfg.k_max < 0) throw InvalidArgument("invalid calibration config");
  const std::array<SamplePair, 4> first{stream[0], stream[1], stream[2], stream[3]};
  CalibState s;
  try {
    s = init(first, eval, cfg);
  } catch (const DegenerateConfiguration&) {
    // A coplanar start is an infinite-cost pool; later pairs can still repair it.
    s.pool = first;
    s.cost = kInf;
    s.history.push_back(entry(0, false, s));
  }

  int k = 0;
  std::size_t next = 4;
  while (s.cost > cfg.e_required && k < cfg.k_max && next < stream.size()) {
    s = step(s, stream[next], eval, cfg, static_cast<long>(next));
    ++next;
    ++k;
  }

  CalibOutcome out;
  out.H_optimal = s.H_optimal;
  out.e_optimal = s.e_optimal;
  out.cost = s.cost;
  out.iterations_used = k;
  out.pool_ids = s.pool_ids;
  out.history = std::move(s.history);
  out.H_compensated = s.e_optimal.failed() ? s.H_optimal : compensate(s.H_optimal, s.e_optimal);
  return out;
}

RigidTransform compensate(const RigidTransform& H_optimal, const IcpErrorMetric& e_optimal) {
  if (e_optimal.failed()) throw CannotCompensate("error metric is infinite");
  return H_optimal * e_optimal.delta();
}

}  // namespace flangecal
