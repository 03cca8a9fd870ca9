#include "flangecal/flange_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "flangecal/errors.hpp"

namespace flangecal {

namespace {
constexpr double kPi = std::numbers::pi;
}

void FlangeModel::validate() const {
  if (!(outer_radius > 0 && annulus_inner_radius >= 0 && annulus_inner_radius < outer_radius && sample_density > 0))
    throw InvalidArgument("invalid flange radii or density");
  if (hole_count < 0) throw InvalidArgument("hole_count must be non-negative");
  if (hole_count > 0) {
    if (!(hole_radius > 0)) throw InvalidArgument("hole_radius must be positive");
    if (bolt_circle_radius - hole_radius < annulus_inner_radius || bolt_circle_radius + hole_radius > outer_radius)
      throw InvalidArgument("holes must lie inside the annulus");
  }
}

double FlangeModel::spacing() const { return 1.0 / std::sqrt(sample_density); }

bool FlangeModel::contains(double x, double y, double margin) const {
  const double r = std::hypot(x, y);
  if (r > outer_radius - margin || r < annulus_inner_radius + margin) return false;
  for (int h = 0; h < hole_count; ++h) {
    const double a = 2.0 * kPi * h / hole_count;
    if (std::hypot(x - bolt_circle_radius * std::cos(a), y - bolt_circle_radius * std::sin(a)) < hole_radius + margin)
      return false;
  }
  return true;
}

RigidTransform default_ground_truth() {
  Eigen::Matrix3d r;
  r << 0, -1, 0, -1, 0, 0, 0, 0, -1;
  return {r, Eigen::Vector3d(0.6, -0.0125, 1.0)};
}

PointCloud generate_flange_cloud(const FlangeModel& model, const RigidTransform& pose, double sensor_sigma,
                                 std::uint64_t seed) {
  model.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<Eigen::Vector3d> local;
  const double s = model.spacing();
  const int cells = static_cast<int>(std::ceil(2.0 * model.outer_radius / s));
  // Area samples stay one contour step clear of the edges the contours already cover.
  const double margin = model.contour_spacing_factor > 0 ? s * model.contour_spacing_factor : 0.0;
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      const double x = -model.outer_radius + (i + jitter(rng)) * s;
      const double y = -model.outer_radius + (j + jitter(rng)) * s;
      if (model.contains(x, y, margin)) local.emplace_back(x, y, 0.0);
    }
  }

  if (model.contour_spacing_factor > 0) {
    const double step = s * model.contour_spacing_factor;
    auto ring = [&](double cx, double cy, double r) {
      const int n = std::max(3, static_cast<int>(std::ceil(2.0 * kPi * r / step)));
      for (int k = 0; k < n; ++k) {
        const double a = 2.0 * kPi * k / n;
        local.emplace_back(cx + r * std::cos(a), cy + r * std::sin(a), 0.0);
      }
    };
    ring(0, 0, model.outer_radius);
    if (model.annulus_inner_radius > 0) ring(0, 0, model.annulus_inner_radius);
    for (int h = 0; h < model.hole_count; ++h) {
      const double a = 2.0 * kPi * h / model.hole_count;
      ring(model.bolt_circle_radius * std::cos(a), model.bolt_circle_radius * std::sin(a), model.hole_radius);
    }
  }

  PointCloud out;
  out.frame_tag = "flange";
  out.source = "synthetic flange";
  out.points.reserve(local.size());
  for (const auto& p : local) {
    Eigen::Vector3d q = pose * p;
    if (sensor_sigma > 0) q += sensor_sigma * Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
    out.points.push_back(q);
  }
  return out;
}

FlangeScene generate_scene(const FlangeModel& model, const RigidTransform& flange_pose_base, const SceneConfig& cfg,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  RigidTransform pose = flange_pose_base;
  if (cfg.false_segmentation)
    pose = RigidTransform(flange_pose_base.rotation(), flange_pose_base.translation() + cfg.false_offset);

  std::vector<Eigen::Vector3d> base_pts = generate_flange_cloud(model, pose, 0.0, rng()).points;

  if (cfg.with_wrist) {
    // Cylinder shell coaxial with the flange, starting just behind its face.
    const double area = 2.0 * kPi * cfg.wrist_radius * cfg.wrist_length;
    const int n = static_cast<int>(area * cfg.wrist_density);
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * kPi * uni(rng);
      const double z = -cfg.wrist_gap - cfg.wrist_length * uni(rng);
      base_pts.push_back(pose * Eigen::Vector3d(cfg.wrist_radius * std::cos(a), cfg.wrist_radius * std::sin(a), z));
    }
  }
  if (cfg.with_floor) {
    const Eigen::Vector2d span = cfg.floor_max - cfg.floor_min;
    const int n = static_cast<int>(span.x() * span.y() * cfg.floor_density);
    for (int i = 0; i < n; ++i)
      base_pts.emplace_back(cfg.floor_min.x() + span.x() * uni(rng), cfg.floor_min.y() + span.y() * uni(rng), 0.0);
  }

  const RigidTransform base_to_cam = cfg.H_true.inverse();
  FlangeScene scene;
  scene.cloud.frame_tag = "cam";
  scene.cloud.source = "synthetic scene";
  scene.cloud.points.reserve(base_pts.size());
  for (const auto& p : base_pts) {
    Eigen::Vector3d q = base_to_cam * p;
    if (cfg.sensor_sigma > 0) q += cfg.sensor_sigma * Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
    scene.cloud.points.push_back(q);
  }
  scene.tcp_cam = base_to_cam * pose.translation();
  return scene;
}

PassThroughBox default_scene_box() {
  PassThroughBox b;
  b.min = Eigen::Vector3d(-0.6, -0.6, 0.1);
  b.max = Eigen::Vector3d(0.6, 0.6, 0.95);
  return b;
}

std::array<int, 3> lattice_for(int n, const Eigen::Vector3d& extent, const std::array<int, 3>& preferred) {
  if (n < 1) throw InvalidArgument("lattice needs at least one node");
  if (static_cast<long>(preferred[0]) * preferred[1] * preferred[2] == n) return preferred;
  // Grow the axis with the largest spacing until the lattice holds n nodes.
  std::array<int, 3> d{1, 1, 1};
  while (static_cast<long>(d[0]) * d[1] * d[2] < n) {
    int best = 0;
    double best_gap = -1.0;
    for (int a = 0; a < 3; ++a) {
      const double gap = extent[a] / d[a];
      if (gap > best_gap) best_gap = gap, best = a;
    }
    ++d[best];
  }
  return d;
}

std::vector<RigidTransform> sample_poses(const SimScenario& sc) {
  if (sc.n_poses < 4) throw InvalidArgument("need at least four poses");
  const auto dims = lattice_for(sc.n_poses, sc.workspace_extent, sc.lattice);
  std::mt19937_64 rng(sc.rng_seed);
  std::uniform_real_distribution<double> ang(-sc.orientation_limit, sc.orientation_limit);
  const Eigen::Vector3d cam_pos = sc.H_true.translation();

  std::vector<RigidTransform> out;
  out.reserve(sc.n_poses);
  auto coord = [&](int a, int i) {
    if (dims[a] == 1) return sc.workspace_center[a];
    return sc.workspace_center[a] + sc.workspace_extent[a] * (static_cast<double>(i) / (dims[a] - 1) - 0.5);
  };
  for (int ix = 0; ix < dims[0] && static_cast<int>(out.size()) < sc.n_poses; ++ix)
    for (int iy = 0; iy < dims[1] && static_cast<int>(out.size()) < sc.n_poses; ++iy)
      for (int iz = 0; iz < dims[2] && static_cast<int>(out.size()) < sc.n_poses; ++iz) {
        const Eigen::Vector3d p(coord(0, ix), coord(1, iy), coord(2, iz));
        const Eigen::Vector3d to_cam = cam_pos - p;
        Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
        for (int attempt = 0; attempt < 1000; ++attempt) {
          const RpyAngles rpy{ang(rng), ang(rng), ang(rng)};
          const Eigen::Matrix3d cand = rotation_from_rpy(rpy);
          const double c = to_cam.norm() > 0 ? cand.col(2).dot(to_cam.normalized()) : 1.0;
          if (std::acos(std::clamp(c, -1.0, 1.0)) <= sc.theta_max) {
            r = cand;
            break;
          }
        }
        out.emplace_back(r, p);
      }
  return out;
}

Eigen::Vector3d disturb_point(const Eigen::Vector3d& p_base, const RigidTransform& H_true, double sigma,
                              std::mt19937_64& rng) {
  if (sigma < 0) throw InvalidArgument("sigma must be non-negative");
  Eigen::Vector3d p = H_true.inverse() * p_base;
  if (sigma > 0) {
    std::normal_distribution<double> n(0.0, sigma);
    p += Eigen::Vector3d(n(rng), n(rng), n(rng));
  }
  return p;
}

Eigen::Vector3d disturb_point(const Eigen::Vector3d& p_base, const RigidTransform& H_true, double sigma,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return disturb_point(p_base, H_true, sigma, rng);
}

std::mt19937_64 realization_rng(std::uint64_t master, std::uint64_t sigma_idx, std::uint64_t real_idx) {
  auto split = [](std::uint64_t v) {
    return std::array<std::uint32_t, 2>{static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v >> 32)};
  };
  const auto m = split(master), s = split(sigma_idx), r = split(real_idx);
  std::seed_seq seq{m[0], m[1], s[0], s[1], r[0], r[1]};
  return std::mt19937_64(seq);
}

std::vector<SamplePair> make_pairs(const std::vector<RigidTransform>& poses, const RigidTransform& H_true,
                                   double sigma, std::mt19937_64& rng) {
  std::vector<SamplePair> pairs;
  pairs.reserve(poses.size());
  for (const auto& pose : poses) {
    SamplePair sp;
    sp.robot_pose = pose;
    sp.p_base = pose.translation();
    sp.p_cam = disturb_point(sp.p_base, H_true, sigma, rng);
    pairs.push_back(sp);
  }
  return pairs;
}

ComponentStats component_stats(const std::vector<ErrorVec>& samples) {
  ComponentStats st;
  st.count = static_cast<int>(samples.size());
  if (samples.empty()) return st;
  for (const auto& s : samples) st.mean += s;
  st.mean /= static_cast<double>(samples.size());
  if (samples.size() > 1) {
    ErrorVec var = ErrorVec::Zero();
    for (const auto& s : samples) var += (s - st.mean).cwiseAbs2();
    st.std = (var / static_cast<double>(samples.size() - 1)).cwiseSqrt();
  }
  return st;
}

std::string method_name(Method m) { return m == Method::AllPoints ? "all" : "iterative"; }

namespace {

struct RealizationOut {
  ErrorVec all = ErrorVec::Zero();
  ErrorVec iter = ErrorVec::Zero();
  bool all_ok = false, iter_ok = false;
  std::vector<std::optional<ErrorVec>> trace;
};

RealizationOut run_realization(const SweepConfig& cfg, const std::vector<RigidTransform>& poses, double sigma,
                               std::size_t si, std::size_t ri, bool want_trace) {
  RealizationOut out;
  auto rng = realization_rng(cfg.scenario.rng_seed, si, ri);
  std::vector<RigidTransform> order = poses;
  std::shuffle(order.begin(), order.end(), rng);
  const auto pairs = make_pairs(order, cfg.scenario.H_true, sigma, rng);

  if (cfg.all_points) {
    try {
      const auto fit = fit_rigid(pairs);
      out.all = simulation_error(fit.transform, cfg.scenario.H_true).pose_error().as_vector();
      out.all_ok = true;
    } catch (const DegenerateConfiguration&) {
    }
  }
  if (cfg.iterative || want_trace) {
    CalibConfig cc;
    cc.e_required = cfg.e_required;
    cc.k_max = static_cast<int>(pairs.size()) - 4;
    const auto res = run(pairs, simulation_evaluator(cfg.scenario.H_true), cc);
    if (!res.e_optimal.failed()) {
      out.iter = res.e_optimal.pose_error().as_vector();
      out.iter_ok = true;
    }
    if (want_trace) {
      out.trace.resize(static_cast<std::size_t>(cc.k_max) + 1);
      std::optional<ErrorVec> last;
      std::size_t h = 0;
      for (int k = 0; k <= cc.k_max; ++k) {
        while (h < res.history.size() && res.history[h].iteration <= k) {
          last = res.history[h].error ? std::optional<ErrorVec>(res.history[h].error->as_vector()) : std::nullopt;
          ++h;
        }
        out.trace[static_cast<std::size_t>(k)] = last;
      }
    }
  }
  return out;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg) {
  if (cfg.sigmas.empty() || cfg.n_realizations < 1) throw InvalidArgument("empty sweep");
  const auto poses = sample_poses(cfg.scenario);
  SweepResult res;

  // Trace at the sigma closest to trace_sigma.
  std::size_t trace_idx = 0;
  for (std::size_t i = 1; i < cfg.sigmas.size(); ++i)
    if (std::abs(cfg.sigmas[i] - cfg.trace_sigma) < std::abs(cfg.sigmas[trace_idx] - cfg.trace_sigma)) trace_idx = i;
  res.trace_sigma = cfg.sigmas[trace_idx];

  const std::size_t nr = static_cast<std::size_t>(cfg.n_realizations);
  unsigned nthreads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
  nthreads = std::max(1u, std::min<unsigned>(nthreads, static_cast<unsigned>(nr)));

  for (std::size_t si = 0; si < cfg.sigmas.size(); ++si) {
    const bool want_trace = si == trace_idx && cfg.iterative;
    std::vector<RealizationOut> outs(nr);
    auto work = [&](unsigned tid) {
      for (std::size_t ri = tid; ri < nr; ri += nthreads)
        outs[ri] = run_realization(cfg, poses, cfg.sigmas[si], si, ri, want_trace);
    };
    if (nthreads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(work, t);
      for (auto& t : pool) t.join();
    }

    std::vector<ErrorVec> all, iter;
    for (const auto& o : outs) {
      if (o.all_ok) all.push_back(o.all);
      if (o.iter_ok) iter.push_back(o.iter);
    }
    if (cfg.all_points) res.rows.push_back({cfg.sigmas[si], Method::AllPoints, component_stats(all)});
    if (cfg.iterative) res.rows.push_back({cfg.sigmas[si], Method::Iterative, component_stats(iter)});
    res.all_points_samples.push_back(std::move(all));
    res.iterative_samples.push_back(std::move(iter));
    if (want_trace) {
      const std::size_t steps = outs.front().trace.size();
      for (std::size_t k = 0; k < steps; ++k) {
        std::vector<ErrorVec> v;
        for (const auto& o : outs)
          if (o.trace[k]) v.push_back(*o.trace[k]);
        res.trace.push_back({static_cast<int>(k), component_stats(v)});
      }
    }
  }
  return res;
}

std::vector<double> sigma_range(double lo, double hi, double step) {
  if (!(step > 0) || hi < lo || lo < 0) throw InvalidArgument("invalid sigma range");
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 0.5));
  for (int i = 0; i <= n; ++i) out.push_back(lo + step * i);
  return out;
}

double linear_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("slope needs two or more samples");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace flangecal
