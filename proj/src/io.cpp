#include "flangecal/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flangecal/errors.hpp"

namespace flangecal {

namespace fs = std::filesystem;
using nlohmann::json;

double unit_scale(const std::string& units) {
  if (units == "m") return 1.0;
  if (units == "mm") return 1e-3;
  throw UnitMismatch("unknown unit '" + units + "'");
}

std::string format_double(double v, int precision) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, precision);
  return std::string(buf, r.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

double parse_num(const std::string& tok, std::size_t line) {
  double v = 0.0;
  const char* b = tok.data();
  const char* e = b + tok.size();
  if (!tok.empty() && *b == '+') ++b;
  auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e || !std::isfinite(v)) throw ParseError("bad number '" + tok + "'", line);
  return v;
}

std::optional<std::string> units_comment(const std::string& text) {
  const auto pos = text.find("units=");
  if (pos == std::string::npos) return std::nullopt;
  return split_ws(text.substr(pos + 6)).at(0);
}

std::string ext_of(const std::string& path) {
  std::string e = fs::path(path).extension().string();
  for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

PointCloud read_ply(std::istream& in, std::optional<std::string>& declared) {
  std::string line;
  std::size_t ln = 0;
  auto next = [&](std::string& out) {
    if (!std::getline(in, out)) return false;
    ++ln;
    out = trim(out);
    return true;
  };
  if (!next(line) || line != "ply") throw ParseError("missing 'ply' magic", ln);
  long n_vertex = -1;
  bool in_vertex = false, ascii = false;
  std::vector<std::string> props;
  while (true) {
    if (!next(line)) throw ParseError("unterminated PLY header", ln);
    const auto w = split_ws(line);
    if (w.empty()) continue;
    if (w[0] == "end_header") break;
    if (w[0] == "format") {
      if (w.size() < 2 || w[1] != "ascii") throw ParseError("only ASCII PLY is supported", ln);
      ascii = true;
    } else if (w[0] == "comment" || w[0] == "obj_info") {
      if (auto u = units_comment(line)) declared = *u;
    } else if (w[0] == "element") {
      if (w.size() != 3) throw ParseError("malformed element line", ln);
      in_vertex = w[1] == "vertex";
      if (in_vertex) {
        try {
          n_vertex = std::stol(w[2]);
        } catch (...) {
          throw ParseError("bad vertex count", ln);
        }
        if (n_vertex < 0) throw ParseError("negative vertex count", ln);
      } else if (n_vertex < 0) {
        throw ParseError("elements before vertex are not supported", ln);
      }
    } else if (w[0] == "property") {
      if (in_vertex) {
        if (w.size() < 3 || w[1] == "list") throw ParseError("unsupported vertex property", ln);
        props.push_back(w.back());
      }
    } else {
      throw ParseError("unknown header keyword '" + w[0] + "'", ln);
    }
  }
  if (!ascii) throw ParseError("missing format line", ln);
  if (n_vertex < 0) throw ParseError("missing vertex element", ln);
  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i] == "x") ix = static_cast<int>(i);
    if (props[i] == "y") iy = static_cast<int>(i);
    if (props[i] == "z") iz = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("vertex element lacks x/y/z", ln);

  PointCloud c;
  c.points.reserve(static_cast<std::size_t>(n_vertex));
  while (static_cast<long>(c.points.size()) < n_vertex) {
    if (!next(line)) throw ParseError("fewer vertices than declared", ln);
    if (line.empty()) continue;
    const auto w = split_ws(line);
    if (w.size() != props.size()) throw ParseError("wrong number of values", ln);
    c.points.emplace_back(parse_num(w[ix], ln), parse_num(w[iy], ln), parse_num(w[iz], ln));
  }
  return c;
}

PointCloud read_csv_cloud(std::istream& in, std::optional<std::string>& declared) {
  std::string line;
  std::size_t ln = 0;
  bool header = false;
  PointCloud c;
  while (std::getline(in, line)) {
    ++ln;
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (auto u = units_comment(line)) declared = *u;
      continue;
    }
    const auto f = split(line, ',');
    if (!header) {
      if (f.size() < 3 || f[0] != "x" || f[1] != "y" || f[2] != "z") throw ParseError("expected header 'x,y,z'", ln);
      header = true;
      continue;
    }
    if (f.size() < 3) throw ParseError("expected three columns", ln);
    c.points.emplace_back(parse_num(f[0], ln), parse_num(f[1], ln), parse_num(f[2], ln));
  }
  if (!header) throw ParseError("missing header 'x,y,z'", ln);
  return c;
}

json pose_to_json(const RigidTransform& t, double to_units) {
  const Eigen::Quaterniond q(t.rotation());
  const Eigen::Vector3d tr = t.translation() / to_units;
  return json{{"translation", {tr.x(), tr.y(), tr.z()}}, {"quaternion", {q.w(), q.x(), q.y(), q.z()}}};
}

RigidTransform pose_from_json(const json& j, double scale, const std::string& where) {
  if (!j.is_object() || !j.contains("translation")) throw SchemaError(where + ": pose needs 'translation'");
  const auto& tj = j.at("translation");
  if (!tj.is_array() || tj.size() != 3) throw SchemaError(where + ": translation must have 3 numbers");
  Eigen::Vector3d t;
  for (int i = 0; i < 3; ++i) {
    if (!tj[i].is_number()) throw SchemaError(where + ": translation must be numeric");
    t[i] = tj[i].get<double>() * scale;
  }
  const bool hq = j.contains("quaternion"), hr = j.contains("rpy");
  if (hq == hr) throw SchemaError(where + ": exactly one of 'quaternion' or 'rpy' is required");
  Eigen::Matrix3d r;
  if (hq) {
    const auto& qj = j.at("quaternion");
    if (!qj.is_array() || qj.size() != 4) throw SchemaError(where + ": quaternion must be [w,x,y,z]");
    Eigen::Quaterniond q(qj[0].get<double>(), qj[1].get<double>(), qj[2].get<double>(), qj[3].get<double>());
    if (std::abs(q.norm() - 1.0) > 1e-6) throw SchemaError(where + ": quaternion is not unit length");
    r = q.normalized().toRotationMatrix();
  } else {
    const auto& rj = j.at("rpy");
    if (!rj.is_array() || rj.size() != 3) throw SchemaError(where + ": rpy must have 3 numbers");
    r = rotation_from_rpy({rj[0].get<double>(), rj[1].get<double>(), rj[2].get<double>()});
  }
  return {r, t};
}

json matrix_json(const RigidTransform& t) {
  const Eigen::Matrix4d m = t.matrix();
  json rows = json::array();
  for (int i = 0; i < 4; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2), m(i, 3)});
  return rows;
}

RigidTransform matrix_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw SchemaError("transform must be a 4x4 array");
  Eigen::Matrix4d m;
  for (int i = 0; i < 4; ++i) {
    if (!j[i].is_array() || j[i].size() != 4) throw SchemaError("transform must be a 4x4 array");
    for (int k = 0; k < 4; ++k) m(i, k) = j[i][k].get<double>();
  }
  try {
    return RigidTransform::from_matrix(m, 1e-6);
  } catch (const InvalidTransform& e) {
    throw SchemaError(e.what());
  }
}

json error_json(const PoseError& e) {
  return json{{"x_mm", e.delta_t_mm.x()},           {"y_mm", e.delta_t_mm.y()},
              {"z_mm", e.delta_t_mm.z()},           {"roll_deg", e.delta_rpy_deg.roll},
              {"pitch_deg", e.delta_rpy_deg.pitch}, {"yaw_deg", e.delta_rpy_deg.yaw}};
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

void save_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  return out;
}

}  // namespace

PointCloud read_cloud(const std::string& path, const std::optional<std::string>& expected_units) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  std::optional<std::string> declared;
  const std::string ext = ext_of(path);
  PointCloud c;
  if (ext == ".ply")
    c = read_ply(in, declared);
  else if (ext == ".csv")
    c = read_csv_cloud(in, declared);
  else
    throw ParseError("unsupported cloud extension '" + ext + "'", 0);
  if (declared && expected_units && *declared != *expected_units)
    throw UnitMismatch(path + " declares units=" + *declared + " but " + *expected_units + " was expected");
  const std::string units = declared ? *declared : expected_units.value_or("m");
  const double s = unit_scale(units);
  if (s != 1.0)
    for (auto& p : c.points) p *= s;
  c.source = path;
  return c;
}

void write_cloud(const std::string& path, const PointCloud& cloud, const std::string& units,
                 const std::vector<std::string>& comments) {
  const double inv = 1.0 / unit_scale(units);
  const std::string ext = ext_of(path);
  std::ofstream out = open_out(path);
  auto num = [&](double v) { return format_double(v * inv, 9); };
  if (ext == ".ply") {
    out << "ply\nformat ascii 1.0\ncomment units=" << units << "\n";
    for (const auto& c : comments) out << "comment " << c << "\n";
    out << "element vertex " << cloud.size() << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
    for (const auto& p : cloud.points) out << num(p.x()) << ' ' << num(p.y()) << ' ' << num(p.z()) << '\n';
  } else if (ext == ".csv") {
    out << "# units=" << units << "\n";
    for (const auto& c : comments) out << "# " << c << "\n";
    out << "x,y,z\n";
    for (const auto& p : cloud.points) out << num(p.x()) << ',' << num(p.y()) << ',' << num(p.z()) << '\n';
  } else {
    throw Error("unsupported cloud extension '" + ext + "'");
  }
}

std::string DatasetManifest::resolve(const std::string& file) const {
  const fs::path p(file);
  return p.is_absolute() || base_dir.empty() ? file : (fs::path(base_dir) / p).string();
}

DatasetManifest read_manifest(const std::string& path) {
  const json j = load_json(path);
  DatasetManifest m;
  m.base_dir = fs::path(path).parent_path().string();
  if (!j.is_object()) throw SchemaError("manifest must be a JSON object");
  if (!j.contains("version") || !j["version"].is_number_integer() || j["version"].get<int>() != 1)
    throw SchemaError("manifest version must be 1");
  if (!j.contains("units") || !j["units"].is_string()) throw SchemaError("manifest must declare 'units'");
  m.units = j["units"].get<std::string>();
  if (m.units != "m" && m.units != "mm") throw SchemaError("units must be 'm' or 'mm'");
  const double s = unit_scale(m.units);

  if (j.contains("flange")) {
    const auto& f = j["flange"];
    auto get = [&](const char* k, double& v) {
      if (f.contains(k)) v = f[k].get<double>() * s;
    };
    get("outer_radius", m.flange.outer_radius);
    get("bolt_circle_radius", m.flange.bolt_circle_radius);
    get("hole_radius", m.flange.hole_radius);
    get("annulus_inner_radius", m.flange.annulus_inner_radius);
    if (f.contains("hole_count")) m.flange.hole_count = f["hole_count"].get<int>();
    if (f.contains("sample_density")) m.flange.sample_density = f["sample_density"].get<double>() / (s * s);
    try {
      m.flange.validate();
    } catch (const InvalidArgument& e) {
      throw SchemaError(std::string("flange: ") + e.what());
    }
  }

  auto entry = [&](const json& e, const std::string& where) {
    if (!e.is_object() || !e.contains("cloud_file") || !e["cloud_file"].is_string())
      throw SchemaError(where + ": missing 'cloud_file'");
    if (!e.contains("robot_pose")) throw SchemaError(where + ": missing 'robot_pose'");
    ManifestEntry me{e["cloud_file"].get<std::string>(), pose_from_json(e["robot_pose"], s, where)};
    if (!fs::exists(m.resolve(me.cloud_file))) throw SchemaError(where + ": file not found: " + me.cloud_file);
    return me;
  };
  if (!j.contains("pairs") || !j["pairs"].is_array()) throw SchemaError("manifest needs a 'pairs' array");
  for (std::size_t i = 0; i < j["pairs"].size(); ++i)
    m.pairs.push_back(entry(j["pairs"][i], "pairs[" + std::to_string(i) + "]"));
  if (!j.contains("verification")) throw SchemaError("manifest needs 'verification'");
  m.verification = entry(j["verification"], "verification");
  if (j.contains("ground_truth")) {
    const RigidTransform g = matrix_from_json(j["ground_truth"]);
    m.ground_truth = RigidTransform(g.rotation(), g.translation() * s);
  }
  return m;
}

void write_manifest(const std::string& path, const DatasetManifest& m) {
  const double s = unit_scale(m.units);
  json j;
  j["version"] = 1;
  j["units"] = m.units;
  j["flange"] = {{"outer_radius", m.flange.outer_radius / s},
                 {"bolt_circle_radius", m.flange.bolt_circle_radius / s},
                 {"hole_radius", m.flange.hole_radius / s},
                 {"hole_count", m.flange.hole_count},
                 {"annulus_inner_radius", m.flange.annulus_inner_radius / s},
                 {"sample_density", m.flange.sample_density * s * s}};
  j["pairs"] = json::array();
  for (const auto& p : m.pairs) j["pairs"].push_back({{"cloud_file", p.cloud_file}, {"robot_pose", pose_to_json(p.robot_pose, s)}});
  j["verification"] = {{"cloud_file", m.verification.cloud_file},
                       {"robot_pose", pose_to_json(m.verification.robot_pose, s)}};
  if (m.ground_truth) {
    RigidTransform g(m.ground_truth->rotation(), m.ground_truth->translation() / s);
    j["ground_truth"] = matrix_json(g);
  }
  save_json(path, j);
}

void write_results(const std::string& path, const CalibResults& r) {
  json j;
  j["H_optimal"] = matrix_json(r.H_optimal);
  j["H_compensated"] = matrix_json(r.H_compensated);
  j["error"] = r.error ? error_json(*r.error) : json(nullptr);
  j["cost"] = r.cost ? json(*r.cost) : json(nullptr);
  j["failed"] = !r.cost.has_value();
  j["cost_kind"] = r.cost_kind;
  j["iterations_used"] = r.iterations_used;
  save_json(path, j);
}

CalibResults read_results(const std::string& path) {
  const json j = load_json(path);
  CalibResults r;
  if (!j.contains("H_optimal") || !j.contains("H_compensated")) throw SchemaError("results need H matrices");
  r.H_optimal = matrix_from_json(j["H_optimal"]);
  r.H_compensated = matrix_from_json(j["H_compensated"]);
  if (j.contains("error") && !j["error"].is_null()) {
    const auto& e = j["error"];
    PoseError pe;
    pe.delta_t_mm = {e.at("x_mm").get<double>(), e.at("y_mm").get<double>(), e.at("z_mm").get<double>()};
    pe.delta_rpy_deg = {e.at("roll_deg").get<double>(), e.at("pitch_deg").get<double>(), e.at("yaw_deg").get<double>()};
    r.error = pe;
  }
  if (j.contains("cost") && !j["cost"].is_null()) r.cost = j["cost"].get<double>();
  if (j.contains("iterations_used")) r.iterations_used = j["iterations_used"].get<int>();
  if (j.contains("cost_kind")) r.cost_kind = j["cost_kind"].get<std::string>();
  return r;
}

RigidTransform read_transform(const std::string& path, const std::string& key) {
  const json j = load_json(path);
  if (j.is_array()) return matrix_from_json(j);
  for (const std::string& k : {key, std::string("H"), std::string("H_compensated"), std::string("H_optimal")})
    if (j.contains(k)) return matrix_from_json(j[k]);
  throw SchemaError(path + ": no transform found");
}

void write_transform(const std::string& path, const RigidTransform& t) { save_json(path, json{{"H", matrix_json(t)}}); }

IcpErrorMetric read_error(const std::string& path) {
  const json j = load_json(path);
  if (j.contains("failed") && j["failed"].get<bool>()) throw SchemaError(path + ": error metric is marked failed");
  if (!j.contains("delta")) throw SchemaError(path + ": missing 'delta'");
  return IcpErrorMetric::from_delta(matrix_from_json(j["delta"]));
}

void write_error(const std::string& path, const IcpErrorMetric& e) {
  json j;
  j["failed"] = e.failed();
  j["delta"] = e.failed() ? json(nullptr) : matrix_json(e.delta());
  j["error"] = e.failed() ? json(nullptr) : error_json(e.pose_error());
  j["cost_translation_mm"] = e.failed() ? json(nullptr) : json(cost(e, CostKind::translation_norm()));
  save_json(path, j);
}

void write_history_csv(const std::string& path, const std::vector<HistoryEntry>& history, const std::string& comment) {
  std::ofstream out = open_out(path);
  out << "# " << comment << "\n";
  out << "iteration,accepted,cost,dx,dy,dz,droll,dpitch,dyaw\n";
  for (const auto& h : history) {
    out << h.iteration << ',' << (h.accepted ? 1 : 0) << ',' << (std::isfinite(h.cost) ? format_double(h.cost) : "inf");
    if (h.error) {
      const auto v = h.error->as_vector();
      for (int i = 0; i < 6; ++i) out << ',' << format_double(v[i]);
    } else {
      out << ",nan,nan,nan,nan,nan,nan";
    }
    out << '\n';
  }
}

void write_sweep_csv(const std::string& path, const SweepResult& r, const std::string& comment) {
  std::ofstream out = open_out(path);
  out << "# " << comment << "\n";
  out << "sigma_mm,method,stat,dx,dy,dz,droll,dpitch,dyaw\n";
  for (const auto& row : r.rows) {
    for (int s = 0; s < 2; ++s) {
      const ErrorVec& v = s == 0 ? row.stats.mean : row.stats.std;
      out << format_double(row.sigma * 1000.0) << ',' << method_name(row.method) << ',' << (s == 0 ? "mean" : "std");
      for (int i = 0; i < 6; ++i) out << ',' << format_double(v[i]);
      out << '\n';
    }
  }
}

void write_trace_csv(const std::string& path, const SweepResult& r, const std::string& comment) {
  std::ofstream out = open_out(path);
  out << "# " << comment << " trace_sigma_mm=" << format_double(r.trace_sigma * 1000.0) << "\n";
  out << "step,stat,dx,dy,dz,droll,dpitch,dyaw\n";
  for (const auto& row : r.trace) {
    for (int s = 0; s < 2; ++s) {
      const ErrorVec& v = s == 0 ? row.stats.mean : row.stats.std;
      out << row.step << ',' << (s == 0 ? "mean" : "std");
      for (int i = 0; i < 6; ++i) out << ',' << format_double(v[i]);
      out << '\n';
    }
  }
}

void write_weld_csv(const std::string& path, const WeldTrace& trace, const std::string& comment) {
  std::ofstream out = open_out(path);
  out << "# " << comment << " termination=" << termination_name(trace.termination) << "\n";
  out << "t,P_r_x,P_r_y,P_s_x,P_s_y,P_t_x,P_t_y,delta_ts,delta_ns,omega\n";
  for (const auto& s : trace.steps) {
    out << format_double(s.t) << ',' << format_double(s.P_r.x()) << ',' << format_double(s.P_r.y()) << ','
        << format_double(s.P_s.x()) << ',' << format_double(s.P_s.y()) << ',' << format_double(s.P_t.x()) << ','
        << format_double(s.P_t.y()) << ',' << format_double(s.delta_t) << ',' << format_double(s.delta_n) << ','
        << format_double(s.omega) << '\n';
  }
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace flangecal
