#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flangecal/calib.hpp"
#include "flangecal/circle_fit.hpp"
#include "flangecal/errors.hpp"
#include "flangecal/flange_sim.hpp"
#include "flangecal/io.hpp"
#include "flangecal/rigid_fit.hpp"
#include "flangecal/weld_sim.hpp"

using namespace flangecal;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitContactLost = 4;
constexpr double kDeg = std::numbers::pi / 180.0;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// x,y,z in mm and roll,pitch,yaw in degrees.
RigidTransform pose_from_flag(const std::vector<double>& v) {
  if (v.size() != 6) throw InvalidArgument("pose needs six values: x,y,z[mm],roll,pitch,yaw[deg]");
  return RigidTransform::from_rpy({v[3] * kDeg, v[4] * kDeg, v[5] * kDeg}, Eigen::Vector3d(v[0], v[1], v[2]) / 1000.0);
}

std::string csv_comment(std::uint64_t seed, const std::string& config) {
  return "seed=" + std::to_string(seed) + " config_hash=" + hex64(fnv1a(config));
}

void print_config(const CLI::App& sub, std::string& text) {
  text = sub.config_to_str(true, false);
  std::cout << "# resolved config [" << sub.get_name() << "]\n";
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) std::cout << "#   " << line << "\n";
}

FlangeModel load_model(const std::string& path) {
  FlangeModel m;
  if (path.empty()) return m;
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open model config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  const double s = unit_scale(j.value("units", std::string("m")));
  auto get = [&](const char* k, double& dst) {
    if (j.contains(k)) dst = j[k].get<double>() * s;
  };
  get("outer_radius", m.outer_radius);
  get("bolt_circle_radius", m.bolt_circle_radius);
  get("hole_radius", m.hole_radius);
  get("annulus_inner_radius", m.annulus_inner_radius);
  if (j.contains("hole_count")) m.hole_count = j["hole_count"].get<int>();
  if (j.contains("sample_density")) m.sample_density = j["sample_density"].get<double>() / (s * s);
  m.validate();
  return m;
}

std::string sibling(const std::string& path, const std::string& ext) {
  fs::path p(path);
  p.replace_extension(ext);
  return p.string();
}

// ---- gen-flange ------------------------------------------------------------------------

struct GenOptions {
  std::string model_config;
  std::vector<double> pose{0, 0, 600, 0, 0, 0};
  double sigma_mm = 0.0;
  std::uint64_t seed = 1;
  std::string out;
  int dataset = 0;
  int false_segmentations = 0;
  std::string units = "m";
};

int gen_flange(const GenOptions& o) {
  const FlangeModel model = load_model(o.model_config);
  const double sigma = o.sigma_mm / 1000.0;

  if (o.dataset == 0) {
    // Single flange cloud in the scanner frame; the TCP is the pose translation.
    const RigidTransform pose = pose_from_flag(o.pose);
    const PointCloud cloud = generate_flange_cloud(model, pose, sigma, o.seed);
    write_cloud(o.out, cloud, o.units, {"seed=" + std::to_string(o.seed)});
    json meta{{"cloud_file", fs::path(o.out).filename().string()},
              {"frame", "cam"},
              {"units", "m"},
              {"points", cloud.size()},
              {"sigma", sigma},
              {"seed", o.seed},
              {"tcp", {pose.translation().x(), pose.translation().y(), pose.translation().z()}}};
    std::ofstream(sibling(o.out, ".json")) << meta.dump(2) << "\n";
    std::cout << "wrote " << cloud.size() << " points to " << o.out << "\n";
    return 0;
  }

  if (o.dataset < 4) throw InvalidArgument("--dataset needs at least 4 poses");
  if (o.false_segmentations < 0 || o.false_segmentations > o.dataset)
    throw InvalidArgument("--false-segmentations must be between 0 and --dataset");
  fs::create_directories(o.out);
  SimScenario sc;
  sc.n_poses = o.dataset;
  sc.rng_seed = o.seed;
  auto poses = sample_poses(sc);
  std::mt19937_64 rng(o.seed);
  std::shuffle(poses.begin(), poses.end(), rng);
  std::vector<int> order(poses.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> is_false(poses.size(), false);
  for (int k = 0; k < o.false_segmentations; ++k) is_false[static_cast<std::size_t>(order[k])] = true;

  DatasetManifest m;
  m.units = o.units;
  m.flange = model;
  m.ground_truth = sc.H_true;
  json meta = json::array();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    SceneConfig cfg;
    cfg.sensor_sigma = sigma;
    cfg.false_segmentation = is_false[i];
    const FlangeScene scene = generate_scene(model, poses[i], cfg, rng());
    char name[32];
    std::snprintf(name, sizeof name, "cloud_%03zu.ply", i);
    write_cloud((fs::path(o.out) / name).string(), scene.cloud, o.units);
    m.pairs.push_back({name, poses[i]});
    meta.push_back({{"cloud_file", name},
                    {"false_segmentation", cfg.false_segmentation},
                    {"tcp_cam", {scene.tcp_cam.x(), scene.tcp_cam.y(), scene.tcp_cam.z()}}});
  }
  // Verification: the segmented flange alone at the workspace centre, facing the scanner.
  const RigidTransform pose_v = RigidTransform::from_translation(sc.workspace_center);
  const PointCloud p_v = generate_flange_cloud(model, sc.H_true.inverse() * pose_v, sigma, rng());
  write_cloud((fs::path(o.out) / "verification.ply").string(), p_v, o.units);
  m.verification = {"verification.ply", pose_v};
  write_manifest((fs::path(o.out) / "manifest.json").string(), m);
  std::ofstream(fs::path(o.out) / "metadata.json")
      << json{{"seed", o.seed}, {"sigma", sigma}, {"units", "m"}, {"pairs", meta}}.dump(2) << "\n";
  std::cout << "wrote " << poses.size() << " scene clouds (" << o.false_segmentations
            << " false segmentations) and manifest.json to " << o.out << "\n";
  return 0;
}

// ---- sim-calib -------------------------------------------------------------------------

struct SimCalibOptions {
  std::string sigma_range = "0.2:0.2:10";
  int realizations = 100;
  int poses = 75;
  std::string method = "both";
  std::uint64_t seed = 42;
  std::string out_dir = ".";
  double trace_sigma_mm = 1.0;
  int threads = 0;
};

std::vector<double> parse_range_mm(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--sigma-range", "expected lo:step:hi in mm, got '" + text + "'");
    }
  }
  if (v.size() == 1) v = {v[0], 1.0, v[0]};
  if (v.size() != 3 || !(v[1] > 0) || v[0] < 0 || v[2] < v[0])
    throw CLI::ValidationError("--sigma-range", "expected lo:step:hi with 0 <= lo <= hi and step > 0");
  return sigma_range(v[0] / 1000.0, v[2] / 1000.0, v[1] / 1000.0);
}

int sim_calib(const SimCalibOptions& o, const std::string& config) {
  SweepConfig cfg;
  cfg.sigmas = parse_range_mm(o.sigma_range);
  cfg.n_realizations = o.realizations;
  cfg.scenario.n_poses = o.poses;
  cfg.scenario.rng_seed = o.seed;
  cfg.all_points = o.method != "iterative";
  cfg.iterative = o.method != "all";
  cfg.trace_sigma = o.trace_sigma_mm / 1000.0;
  cfg.threads = o.threads;
  const SweepResult r = run_sweep(cfg);
  fs::create_directories(o.out_dir);
  const std::string comment = csv_comment(o.seed, config);
  write_sweep_csv((fs::path(o.out_dir) / "sweep.csv").string(), r, comment);
  if (cfg.iterative) write_trace_csv((fs::path(o.out_dir) / "convergence.csv").string(), r, comment);
  for (const auto& row : r.rows)
    std::printf("sigma %6.2f mm %-9s std x %.3f y %.3f z %.3f mm  roll %.4f pitch %.4f yaw %.4f deg\n",
                row.sigma * 1000, method_name(row.method).c_str(), row.stats.std(0), row.stats.std(1),
                row.stats.std(2), row.stats.std(3), row.stats.std(4), row.stats.std(5));
  return 0;
}

// ---- calibrate -------------------------------------------------------------------------

struct SceneOptions {
  std::vector<double> box_mm{-600, -600, 100, 600, 600, 950};
  double e_d_mm = 1.0;
  double e_r_mm = 1.0;
  int ransac_iterations = 10000;
  double cluster_tolerance_mm = 2.0;
  int outlier_k = 20;
  double outlier_mult = 2.0;
};

SceneParams scene_params(const SceneOptions& o, const FlangeModel& model, std::uint64_t seed) {
  if (o.box_mm.size() != 6) throw InvalidArgument("--box needs six values");
  SceneParams p;
  p.box.min = Eigen::Vector3d(o.box_mm[0], o.box_mm[1], o.box_mm[2]) / 1000.0;
  p.box.max = Eigen::Vector3d(o.box_mm[3], o.box_mm[4], o.box_mm[5]) / 1000.0;
  p.outlier = {o.outlier_k, o.outlier_mult};
  p.cluster.cluster_tolerance = o.cluster_tolerance_mm / 1000.0;
  p.cluster.max_extent = 2.2 * model.outer_radius;
  p.ransac.distance_threshold = o.e_d_mm / 1000.0;
  p.ransac.radius_tolerance = o.e_r_mm / 1000.0;
  p.ransac.expected_radius = model.outer_radius;
  p.ransac.max_iterations = o.ransac_iterations;
  p.ransac.rng_seed = seed;
  return p;
}

struct CalibrateOptions {
  std::string manifest;
  double e_required_mm = 0.1;
  int k_max = 100;
  std::string cost = "translation";
  double radius_mm = 300.0;
  std::string mode = "iterative";
  bool sequential = false;
  bool with_scale = false;
  std::string out = "results.json";
  std::string history;
  std::uint64_t seed = 1;
  SceneOptions scene;
};

CostKind cost_kind(const std::string& name, double radius_mm) {
  if (name == "translation") return CostKind::translation_norm();
  if (name == "xy") return CostKind::xy_only();
  if (name == "combined") return CostKind::combined(radius_mm);
  throw InvalidArgument("unknown cost '" + name + "'");
}

void report_truth(const DatasetManifest& m, const char* label, const RigidTransform& H) {
  if (!m.ground_truth) return;
  const PoseError e = pose_error(H.inverse() * *m.ground_truth);
  std::printf("%s vs ground truth: |dt| %.4f mm  (%.4f, %.4f, %.4f) mm  rpy (%.4f, %.4f, %.4f) deg\n", label,
              e.delta_t_mm.norm(), e.delta_t_mm.x(), e.delta_t_mm.y(), e.delta_t_mm.z(), e.delta_rpy_deg.roll,
              e.delta_rpy_deg.pitch, e.delta_rpy_deg.yaw);
}

int calibrate(const CalibrateOptions& o, const std::string& config) {
  const DatasetManifest m = read_manifest(o.manifest);
  const SceneParams sp = scene_params(o.scene, m.flange, o.seed);

  std::vector<SamplePair> pairs;
  for (const auto& e : m.pairs) {
    const PointCloud scene = read_cloud(m.resolve(e.cloud_file), m.units);
    try {
      SamplePair s;
      s.p_cam = flange_tcp_from_scene(scene, sp);
      s.p_base = e.robot_pose.translation();
      s.robot_pose = e.robot_pose;
      s.cloud_ref = e.cloud_file;
      pairs.push_back(s);
    } catch (const SegmentationFailed&) {
      std::cerr << "warning: segmentation failed for " << e.cloud_file << ", pair skipped\n";
    }
  }
  std::cout << "tcp extracted from " << pairs.size() << "/" << m.pairs.size() << " clouds\n";

  const PointCloud p_v = read_cloud(m.resolve(m.verification.cloud_file), m.units);
  const PointCloud p_true = generate_flange_cloud(m.flange, RigidTransform::identity(), 0.0, o.seed);
  const ErrorEvaluator eval = cloud_evaluator(m.verification.robot_pose, p_true, p_v, IcpParams{});

  CalibConfig cfg;
  cfg.e_required = o.e_required_mm;
  cfg.k_max = o.k_max;
  cfg.cost_kind = cost_kind(o.cost, o.radius_mm);
  cfg.sequential = o.sequential;
  cfg.with_scale = o.with_scale;

  CalibResults res;
  res.cost_kind = o.cost;
  std::vector<HistoryEntry> history;
  if (o.mode == "all") {
    const RigidTransform H = fit_rigid(pairs, o.with_scale).transform;
    const IcpErrorMetric e = eval(H);
    res.H_optimal = H;
    res.H_compensated = e.failed() ? H : compensate(H, e);
    if (!e.failed()) res.error = e.pose_error();
    const double c = cost(e, cfg.cost_kind);
    if (std::isfinite(c)) res.cost = c;
    res.iterations_used = 0;
    history.push_back({0, true, c, res.error});
  } else {
    const CalibOutcome out = run(pairs, eval, cfg);
    res.H_optimal = out.H_optimal;
    res.H_compensated = out.H_compensated;
    if (!out.e_optimal.failed()) res.error = out.e_optimal.pose_error();
    if (std::isfinite(out.cost)) res.cost = out.cost;
    res.iterations_used = out.iterations_used;
    history = out.history;
    std::cout << "final pool:";
    for (long id : out.pool_ids)
      std::cout << " " << (id >= 0 ? *pairs[static_cast<std::size_t>(id)].cloud_ref : std::string("?"));
    std::cout << "\n";
  }

  write_results(o.out, res);
  write_history_csv(o.history.empty() ? sibling(o.out, ".history.csv") : o.history, history,
                    csv_comment(o.seed, config));
  std::printf("mode %s, %d new pairs used, cost %s mm\n", o.mode.c_str(), res.iterations_used,
              res.cost ? format_double(*res.cost, 6).c_str() : "inf");
  report_truth(m, "H_optimal", res.H_optimal);
  report_truth(m, "H_compensated", res.H_compensated);
  return res.cost ? 0 : kExitNumeric;
}

// ---- verify / compensate ---------------------------------------------------------------

struct VerifyOptions {
  std::string H;
  std::string key = "H_compensated";
  std::string manifest;
  std::string out = "error.json";
  std::uint64_t seed = 1;
};

int verify(const VerifyOptions& o) {
  const RigidTransform H = read_transform(o.H, o.key);
  const DatasetManifest m = read_manifest(o.manifest);
  const PointCloud p_v = read_cloud(m.resolve(m.verification.cloud_file), m.units);
  const PointCloud p_true = generate_flange_cloud(m.flange, RigidTransform::identity(), 0.0, o.seed);
  const IcpErrorMetric e = calibration_error(H, m.verification.robot_pose, p_true, p_v, IcpParams{});
  write_error(o.out, e);
  if (e.failed()) {
    std::cout << "error: ICP failed, cost inf\n";
    return kExitNumeric;
  }
  const PoseError& pe = e.pose_error();
  std::printf("error x %.4f y %.4f z %.4f mm  roll %.4f pitch %.4f yaw %.4f deg  cost %.4f mm\n", pe.delta_t_mm.x(),
              pe.delta_t_mm.y(), pe.delta_t_mm.z(), pe.delta_rpy_deg.roll, pe.delta_rpy_deg.pitch,
              pe.delta_rpy_deg.yaw, pe.delta_t_mm.norm());
  return 0;
}

struct CompensateOptions {
  std::string H;
  std::string key = "H_optimal";
  std::string error;
  std::string out = "compensated.json";
};

int compensate_cmd(const CompensateOptions& o) {
  const RigidTransform H = read_transform(o.H, o.key);
  IcpErrorMetric e = IcpErrorMetric::failure();
  try {
    e = read_error(o.error);
  } catch (const SchemaError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitNumeric;
  }
  const RigidTransform out = compensate(H, e);
  write_transform(o.out, out);
  const Eigen::Matrix4d mat = out.matrix();
  for (int r = 0; r < 4; ++r)
    std::printf("%12.9f %12.9f %12.9f %12.9f\n", mat(r, 0), mat(r, 1), mat(r, 2), mat(r, 3));
  return 0;
}

// ---- sim-weld --------------------------------------------------------------------------

struct WeldOptions {
  std::string seam = "straight";
  double length_mm = 300.0;
  double radius_mm = 100.0;
  double angle_deg = 90.0;
  double amplitude_mm = 10.0;
  double wavelength_mm = 150.0;
  double vision_noise_mm = 1.0;
  double plan_spacing_mm = 10.0;
  double kp = 10.0;
  double delta_d_mm = 2.0;
  double v_mm_s = 10.0;
  double dt = 0.001;
  int max_steps = 200000;
  double tool_offset_mm = 40.0;
  std::string side = "left";
  std::uint64_t seed = 1;
  std::string out = "weld.csv";
};

int sim_weld(const WeldOptions& o, const std::string& config) {
  SeamWorld w;
  if (o.seam == "straight")
    w.true_seam = straight_seam(o.length_mm / 1000.0);
  else if (o.seam == "arc")
    w.true_seam = arc_seam(o.radius_mm / 1000.0, o.angle_deg * kDeg);
  else
    w.true_seam = s_curve_seam(o.length_mm / 1000.0, o.amplitude_mm / 1000.0, o.wavelength_mm / 1000.0);
  w.planned_path = planned_from_seam(w.true_seam, o.plan_spacing_mm / 1000.0, o.vision_noise_mm / 1000.0, o.seed);
  w.tool_offset = o.tool_offset_mm / 1000.0;
  w.side = o.side == "left" ? ContactSide::Left : ContactSide::Right;

  ServoParams p;
  p.k_p = o.kp;
  p.delta_d = o.delta_d_mm / 1000.0;
  p.v_const = o.v_mm_s / 1000.0;
  p.dt = o.dt;
  p.max_steps = o.max_steps;

  const WeldTrace tr = run_weld(w, p);
  write_weld_csv(o.out, tr, csv_comment(o.seed, config));
  const double planned = rms_distance(w.planned_path.points(), w.true_seam);
  const double refined = rms_distance(tr.refined_path, w.true_seam);
  std::printf("termination %s after %zu steps; planned rms %.4f mm, refined rms %.4f mm\n",
              termination_name(tr.termination).c_str(), tr.steps.size(), planned * 1000, refined * 1000);
  if (!tr.message.empty()) std::cout << tr.message << "\n";
  switch (tr.termination) {
    case WeldTermination::ContactLost: return kExitContactLost;
    case WeldTermination::KinematicSingularity: return kExitNumeric;
    default: return 0;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flange-based hand-eye calibration and seam tracking toolkit"};
  app.set_config("--config", "", "flat key=value config file; [command] sections select a subcommand");
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen-flange", "synthesize a flange cloud or a calibration dataset");
  g->add_option("--model-config", gen.model_config, "flange model JSON (units key: m or mm)");
  g->add_option("--pose", gen.pose, "x,y,z[mm],roll,pitch,yaw[deg] of the flange in the scanner frame")
      ->delimiter(',')
      ->expected(6)
      ->capture_default_str();
  g->add_option("--sigma", gen.sigma_mm, "sensor noise std [mm]")->capture_default_str()->check(CLI::NonNegativeNumber);
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--out", gen.out, "PLY path, or output directory with --dataset")->required();
  g->add_option("--dataset", gen.dataset, "generate N scene clouds plus manifest.json")->capture_default_str();
  g->add_option("--false-segmentations", gen.false_segmentations, "scenes with a displaced flange")
      ->capture_default_str();
  g->add_option("--units", gen.units, "units written to cloud files")
      ->capture_default_str()
      ->check(CLI::IsMember({"m", "mm"}));

  SimCalibOptions sim;
  auto* s = app.add_subcommand("sim-calib", "Monte-Carlo sweep of both calibration methods");
  s->add_option("--sigma-range", sim.sigma_range, "lo:step:hi noise levels [mm]")->capture_default_str();
  s->add_option("--realizations", sim.realizations)->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--poses", sim.poses)->capture_default_str()->check(CLI::Range(4, 100000));
  s->add_option("--method", sim.method)->capture_default_str()->check(CLI::IsMember({"both", "all", "iterative"}));
  s->add_option("--seed", sim.seed)->capture_default_str();
  s->add_option("--out-dir", sim.out_dir)->capture_default_str();
  s->add_option("--trace-sigma", sim.trace_sigma_mm, "noise level of the convergence trace [mm]")
      ->capture_default_str();
  s->add_option("--threads", sim.threads, "0 uses all cores")->capture_default_str();

  CalibrateOptions cal;
  auto* c = app.add_subcommand("calibrate", "run the iterative calibration on a recorded dataset");
  c->add_option("--manifest", cal.manifest)->required()->check(CLI::ExistingFile);
  c->add_option("--e-required", cal.e_required_mm, "stop threshold [mm]")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--k-max", cal.k_max, "new pairs to consume at most")->capture_default_str()->check(CLI::NonNegativeNumber);
  c->add_option("--cost", cal.cost)->capture_default_str()->check(CLI::IsMember({"translation", "combined", "xy"}));
  c->add_option("--radius", cal.radius_mm, "lever arm of the combined cost [mm]")->capture_default_str();
  c->add_option("--mode", cal.mode)->capture_default_str()->check(CLI::IsMember({"iterative", "all"}));
  c->add_flag("--sequential", cal.sequential, "in-place substitution loop");
  c->add_flag("--with-scale", cal.with_scale, "similarity fit with scale");
  c->add_option("--out", cal.out)->capture_default_str();
  c->add_option("--history", cal.history, "history CSV (default: next to --out)");
  c->add_option("--seed", cal.seed)->capture_default_str();
  c->add_option("--box", cal.scene.box_mm, "crop box xmin,ymin,zmin,xmax,ymax,zmax [mm]")
      ->delimiter(',')
      ->expected(6)
      ->capture_default_str();
  c->add_option("--ed", cal.scene.e_d_mm, "RANSAC distance threshold [mm]")->capture_default_str();
  c->add_option("--er", cal.scene.e_r_mm, "RANSAC radius tolerance [mm]")->capture_default_str();
  c->add_option("--ransac-iterations", cal.scene.ransac_iterations)->capture_default_str();
  c->add_option("--cluster-tolerance", cal.scene.cluster_tolerance_mm, "[mm]")->capture_default_str();
  c->add_option("--outlier-k", cal.scene.outlier_k)->capture_default_str();
  c->add_option("--outlier-mult", cal.scene.outlier_mult)->capture_default_str();

  VerifyOptions ver;
  auto* v = app.add_subcommand("verify", "score a hand-eye matrix against the verification cloud");
  v->add_option("--H", ver.H, "results or transform JSON")->required()->check(CLI::ExistingFile);
  v->add_option("--key", ver.key)->capture_default_str();
  v->add_option("--manifest,--manifest-verification", ver.manifest)->required()->check(CLI::ExistingFile);
  v->add_option("--out", ver.out)->capture_default_str();
  v->add_option("--seed", ver.seed)->capture_default_str();

  CompensateOptions comp;
  auto* k = app.add_subcommand("compensate", "apply a measured error to a hand-eye matrix");
  k->add_option("--H", comp.H)->required()->check(CLI::ExistingFile);
  k->add_option("--key", comp.key)->capture_default_str();
  k->add_option("--error", comp.error)->required()->check(CLI::ExistingFile);
  k->add_option("--out", comp.out)->capture_default_str();

  WeldOptions weld;
  auto* w = app.add_subcommand("sim-weld", "simulate seam tracking with the compliant tip");
  w->add_option("--seam", weld.seam)->capture_default_str()->check(CLI::IsMember({"straight", "arc", "s-curve"}));
  w->add_option("--length", weld.length_mm, "[mm]")->capture_default_str();
  w->add_option("--radius", weld.radius_mm, "arc radius [mm]")->capture_default_str();
  w->add_option("--angle", weld.angle_deg, "arc angle [deg]")->capture_default_str();
  w->add_option("--amplitude", weld.amplitude_mm, "s-curve amplitude [mm]")->capture_default_str();
  w->add_option("--wavelength", weld.wavelength_mm, "s-curve wavelength [mm]")->capture_default_str();
  w->add_option("--vision-noise", weld.vision_noise_mm, "planned path noise [mm]")->capture_default_str();
  w->add_option("--plan-spacing", weld.plan_spacing_mm, "[mm]")->capture_default_str();
  w->add_option("--kp", weld.kp, "[1/s]")->capture_default_str()->check(CLI::PositiveNumber);
  w->add_option("--delta-d", weld.delta_d_mm, "[mm]")->capture_default_str()->check(CLI::NonNegativeNumber);
  w->add_option("--v", weld.v_mm_s, "feed speed [mm/s]")->capture_default_str()->check(CLI::PositiveNumber);
  w->add_option("--dt", weld.dt, "[s]")->capture_default_str()->check(CLI::PositiveNumber);
  w->add_option("--max-steps", weld.max_steps)->capture_default_str();
  w->add_option("--tool-offset", weld.tool_offset_mm, "[mm]")->capture_default_str();
  w->add_option("--side", weld.side)->capture_default_str()->check(CLI::IsMember({"left", "right"}));
  w->add_option("--seed", weld.seed)->capture_default_str();
  w->add_option("--out", weld.out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  std::string config;
  try {
    if (*g) {
      print_config(*g, config);
      return gen_flange(gen);
    }
    if (*s) {
      print_config(*s, config);
      return sim_calib(sim, config);
    }
    if (*c) {
      print_config(*c, config);
      return calibrate(cal, config);
    }
    if (*v) {
      print_config(*v, config);
      return verify(ver);
    }
    if (*k) {
      print_config(*k, config);
      return compensate_cmd(comp);
    }
    if (*w) {
      print_config(*w, config);
      return sim_weld(weld, config);
    }
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ContactLost& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitContactLost;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
