#include "cclab/lab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "cclab/acceptance.hpp"
#include "cclab/expr.hpp"
#include "cclab/flows.hpp"
#include "cclab/geodesy.hpp"
#include "cclab/heat.hpp"
#include "cclab/measure.hpp"
#include "cclab/norms.hpp"

namespace fs = std::filesystem;

namespace cclab {

std::vector<std::string> experiment_names() {
  return {"dist", "volume", "doubling", "poincare", "heat", "gaussfit", "lift-check", "harnack", "flow", "schauder",
          "acceptance"};
}

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Frame name for built-ins, otherwise a digest of the frame file.
std::string frame_identity(const std::string& frame) {
  if (frame.find('/') != std::string::npos || frame.find(".frame") != std::string::npos)
    return "file:" + hex64(fnv1a(read_file(frame)));
  return frame;
}

Axis parse_axis(const std::string& item, int line, int col) {
  const auto parts = split_list(item, ':');
  if (parts.size() < 2 || parts.size() > 3) parse_error_at(line, col, "axis must be lo:hi or lo:hi:periodic");
  Axis a;
  try {
    a.lo = std::stod(parts[0]);
    a.hi = std::stod(parts[1]);
  } catch (const std::exception&) {
    parse_error_at(line, col, "bad number in axis '" + item + "'");
  }
  if (!(a.hi > a.lo)) parse_error_at(line, col, "axis needs lo < hi");
  if (parts.size() == 3) {
    if (parts[2] != "periodic") parse_error_at(line, col, "unknown axis flag '" + parts[2] + "'");
    a.periodic = true;
    a.hi = a.lo + 2.0 * M_PI;
  }
  return a;
}

std::vector<double> checked_eps(std::vector<double> eps, int line, int col) {
  auto reject = [&](const std::string& what) {
    if (line > 0) parse_error_at(line, col, what);
    fail(ErrorKind::ParseError, what);
  };
  if (eps.empty()) reject("eps_list is empty");
  for (double e : eps)
    if (!(e >= 0.0) || !std::isfinite(e)) reject("eps_list values must be finite and >= 0");
  std::sort(eps.begin(), eps.end(), std::greater<>());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
  return eps;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& experiment) {
  const IniDocument doc = IniDocument::parse(text);
  ExperimentConfig c;
  const IniSection& top = doc.sections[0];
  for (const IniEntry& e : top.entries) {
    if (e.key == "experiment") c.experiment = e.value;
    else if (e.key == "frame") c.frame = e.value;
    else if (e.key == "eps_list" || e.key == "eps") c.eps_list = checked_eps(entry_doubles(e), e.line, e.value_column);
    else if (e.key == "seed") {
      const long long s = entry_int(e);
      if (s < 0) parse_error_at(e.line, e.value_column, "seed must be >= 0");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (e.key == "out") c.out_dir = e.value;
    else if (e.key == "threads") c.threads = static_cast<int>(entry_int(e));
    else if (e.key == "cache") c.use_cache = entry_bool(e);
    else parse_error_at(e.line, 1, "unknown key '" + e.key + "'");
  }
  if (!experiment.empty()) c.experiment = experiment;
  if (const IniSection* lat = doc.section("lattice")) {
    for (const IniEntry& e : lat->entries) {
      if (e.key == "nodes") {
        c.nodes = static_cast<int>(entry_int(e));
        if (c.nodes < 3) parse_error_at(e.line, e.value_column, "nodes must be at least 3");
      } else if (e.key == "box") {
        c.box.clear();
        int col = e.value_column;
        for (const std::string& item : split_list(e.value, ',')) {
          c.box.push_back(parse_axis(item, e.line, col));
          col += static_cast<int>(item.size()) + 1;
        }
      } else {
        parse_error_at(e.line, 1, "unknown lattice key '" + e.key + "'");
      }
    }
  }
  for (const IniSection& s : doc.sections) {
    if (s.name.empty() || s.name == "lattice") continue;
    if (s.name != c.experiment) continue;
    for (const IniEntry& e : s.entries) c.params[e.key] = e;
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path, const std::string& experiment) {
  return parse(read_file(path), experiment);
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  IniEntry e;
  e.key = key;
  e.value = value;
  params[key] = e;
}

void ExperimentConfig::set_eps_list(const std::vector<double>& eps) { eps_list = checked_eps(eps, 0, 0); }

const IniEntry* ExperimentConfig::param(const std::string& key) const {
  const auto it = params.find(key);
  return it == params.end() ? nullptr : &it->second;
}

double ExperimentConfig::number(const std::string& key, double fallback) const {
  const IniEntry* e = param(key);
  return e ? entry_double(*e) : fallback;
}

long long ExperimentConfig::integer(const std::string& key, long long fallback) const {
  const IniEntry* e = param(key);
  return e ? entry_int(*e) : fallback;
}

std::string ExperimentConfig::text(const std::string& key, const std::string& fallback) const {
  const IniEntry* e = param(key);
  return e ? e->value : fallback;
}

std::vector<double> ExperimentConfig::numbers(const std::string& key, const std::vector<double>& fallback) const {
  const IniEntry* e = param(key);
  return e ? entry_doubles(*e) : fallback;
}

Vec ExperimentConfig::point(const std::string& key, const Vec& fallback) const {
  const IniEntry* e = param(key);
  if (!e) return fallback;
  try {
    return parse_point(e->value);
  } catch (const Error& err) {
    parse_error_at(e->line, e->value_column, err.what());
  }
}

void ExperimentConfig::validate() const {
  const auto names = experiment_names();
  if (experiment.empty()) fail(ErrorKind::ParseError, "no experiment given");
  if (std::find(names.begin(), names.end(), experiment) == names.end())
    fail(ErrorKind::ParseError, "unknown experiment '" + experiment + "'");
  if (!seed) fail(ErrorKind::ParseError, "a seed is required (config key 'seed' or --seed)");
  if (threads < 1) fail(ErrorKind::ParseError, "threads must be at least 1");
  checked_eps(eps_list, 0, 0);
}

std::string ExperimentConfig::canonical() const {
  std::string s = "experiment=" + experiment + "\nframe=" + frame_identity(frame) + "\neps_list=";
  for (std::size_t i = 0; i < eps_list.size(); ++i) s += (i ? "," : "") + g17(eps_list[i]);
  s += "\nseed=" + (seed ? std::to_string(*seed) : std::string("none")) + "\nnodes=" + std::to_string(nodes) + "\nbox=";
  for (const Axis& a : box) s += g17(a.lo) + ":" + g17(a.hi) + (a.periodic ? ":periodic" : "") + ",";
  s += "\n";
  for (const auto& [k, e] : params) s += k + "=" + e.value + "\n";
  return s;
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a(canonical())); }

// ---------------------------------------------------------------------------
// Manifest

bool ResultManifest::all_pass() const {
  if (!error.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::string ResultManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "cclab";
  j["version"] = version;
  j["experiment"] = experiment;
  j["frame"] = frame;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["wall_time_s"] = wall_time;
  j["all_pass"] = all_pass();
  if (!error.empty()) j["error"] = error;
  j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& o : outputs) j["outputs"].push_back({{"path", o.path}, {"kind", o.kind}, {"rows", o.rows}});
  j["scalars"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : scalars) j["scalars"][k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(g17(v));
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["cache"] = {{"hits", cache_hits}, {"misses", cache_misses}};
  return j.dump(2) + "\n";
}

std::string ResultManifest::scalar_summary() const {
  std::string s;
  for (const auto& [k, v] : scalars) s += k + " = " + g17(v) + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// Distance tables

std::string distance_table_key(const std::string& frame_id, double eps, const Lattice& lat, const Vec& x,
                               const Lattice& solve_lat) {
  const std::string text =
      frame_id + "|" + g17(eps) + "|" + lat.describe() + "|" + format_point(x) + "|" + solve_lat.describe();
  return hex64(fnv1a(text));
}

std::vector<double> cached_distance_table(const EpsFrame& ef, const std::string& frame_id, const Lattice& lat,
                                          const Vec& x, const Lattice& solve_lat, const std::string& cache_dir,
                                          bool* hit) {
  if (hit) *hit = false;
  fs::path file;
  if (!cache_dir.empty()) {
    file = fs::path(cache_dir) / ("dist_" + distance_table_key(frame_id, ef.eps(), lat, x, solve_lat) + ".bin");
    std::ifstream in(file, std::ios::binary);
    if (in) {
      std::vector<double> d(lat.size());
      in.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
      if (in.gcount() == static_cast<std::streamsize>(d.size() * sizeof(double)) && in.peek() == EOF) {
        if (hit) *hit = true;
        return d;
      }
    }
  }
  const std::vector<double> d = node_distances(distance_field(ef, solve_lat, x), lat);
  if (!cache_dir.empty()) {
    fs::create_directories(cache_dir);
    const fs::path tmp = file.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
    }
    fs::rename(tmp, file);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

class Table {
 public:
  Table(ResultManifest& m, const std::string& name, const std::vector<std::string>& header, const std::string& kind = "table")
      : m_(m) {
    path_ = (fs::path(m.out_dir) / name).string();
    out_.open(path_);
    if (!out_) fail(ErrorKind::Io, "cannot write " + path_);
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
    m_.outputs.push_back({path_, kind, 0});
    index_ = m_.outputs.size() - 1;
  }

  Table& operator<<(double v) { return cell(g17(v)); }
  Table& operator<<(const std::string& s) { return cell(s); }
  Table& operator<<(const char* s) { return cell(s); }
  void end() {
    out_ << "\n";
    out_.flush();
    first_ = true;
    ++m_.outputs[index_].rows;
  }

 private:
  Table& cell(const std::string& s) {
    out_ << (first_ ? "" : ",") << s;
    first_ = false;
    return *this;
  }

  ResultManifest& m_;
  std::string path_;
  std::ofstream out_;
  std::size_t index_ = 0;
  bool first_ = true;
};

struct Ctx {
  const ExperimentConfig& cfg;
  ResultManifest& m;
  Frame frame;
  std::string frame_id;
  std::uint64_t seed;
  std::string cache_dir;

  std::uint64_t stream(std::uint64_t k) const { return mix_seed(seed, k); }
  void scalar(const std::string& k, double v) { m.scalars.emplace_back(k, v); }
  void plot(double eps, const std::string& axis, double x, const std::string& q, double v) {
    m.plot.push_back({eps, axis, x, q, v});
  }
  void check(const std::string& name, bool pass, const std::string& detail = "") { m.checks.push_back({name, pass, detail}); }
  Vec center() const { return cfg.point("center", Vec::Zero(frame.n)); }
  Lattice box_or(const Lattice& fitted) const { return cfg.box.empty() ? fitted : Lattice(cfg.box); }
  std::vector<double> table(const EpsFrame& ef, const Lattice& lat, const Vec& x, const Lattice& solve) {
    bool hit = false;
    auto d = cached_distance_table(ef, frame_id, lat, x, solve, cfg.use_cache ? cache_dir : "", &hit);
    (hit ? m.cache_hits : m.cache_misses) += 1;
    return d;
  }
};

std::string tag(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void run_dist(Ctx& c) {
  const int n = c.frame.n;
  const Vec x = c.cfg.point("from", Vec::Zero(n));
  const IniEntry* to = c.cfg.param("to");
  if (!to) fail(ErrorKind::ParseError, "dist needs 'to'");
  const Vec y = c.cfg.point("to", x);
  const std::string method = c.cfg.text("method", "all");
  Table t(c.m, "dist.csv", {"eps", "method", "value", "upper_bound_flag", "converged"});
  for (double eps : c.cfg.eps_list) {
    const EpsFrame ef(c.frame, eps);
    std::vector<DistanceResult> res;
    if (method == "all" || method == "gauge") res.push_back(dist_gauge_proxy(ef, x, y));
    if (method == "all" || method == "control")
      res.push_back(dist_control(ef, x, y, static_cast<int>(c.cfg.integer("segments", 8))));
    if (method == "all" || method == "lattice") {
      const double guess = dist_gauge_proxy(ef, x, y).value;
      const Lattice lat = c.box_or(ball_lattice(ef, x, 1.5 * guess + 1e-3, c.cfg.nodes));
      res.push_back(dist_lattice(ef, lat, x, y));
    }
    if (res.empty()) fail(ErrorKind::ParseError, "dist method must be lattice, control, gauge or all");
    for (const auto& r : res) {
      t << eps << to_string(r.method) << r.value << (r.upper_bound_flag ? "1" : "0") << (r.converged ? "1" : "0");
      t.end();
      c.scalar(std::string("d_") + to_string(r.method) + "(" + tag(eps) + ")", r.value);
      c.plot(eps, "method", static_cast<double>(r.method), "distance", r.value);
    }
  }
}

void run_volume(Ctx& c) {
  const Vec x = c.center();
  const auto radii = c.cfg.numbers("radii", {0.25, 0.5, 1.0});
  Table t(c.m, "volume.csv", {"eps", "r", "volume", "stderr", "count_volume", "nsw_volume", "samples"});
  std::uint64_t k = 0;
  for (double eps : c.cfg.eps_list) {
    const EpsFrame ef(c.frame, eps);
    for (double r : radii) {
      VolumeOptions vo;
      vo.samples = c.cfg.integer("samples", 100000);
      vo.seed = c.stream(k++);
      vo.nodes = c.cfg.nodes;
      const VolumeEstimate v = ball_volume_mc(ef, x, r, vo);
      const Lattice lat = ball_lattice(ef, x, r, c.cfg.nodes);
      const auto d = c.table(ef, lat, x, lat);
      double count = 0.0;
      for (double di : d) count += di < r ? 1.0 : 0.0;
      const double cv = count * lat.cell_volume();
      const double nsw = nsw_volume(ef, x, r);
      t << eps << r << v.volume << v.stderr_ << cv << nsw << static_cast<double>(v.sample_count);
      t.end();
      c.scalar("volume(" + tag(eps) + "," + tag(r) + ")", v.volume);
      c.scalar("count_volume(" + tag(eps) + "," + tag(r) + ")", cv);
      c.plot(eps, "r", r, "volume", v.volume);
      c.plot(eps, "r", r, "nsw_volume", nsw);
    }
  }
}

void run_doubling(Ctx& c) {
  const Vec x = c.center();
  const auto radii = c.cfg.numbers("radii", {0.2});
  Table t(c.m, "doubling.csv", {"frame", "eps", "r", "ratio"});
  std::uint64_t k = 0;
  for (double eps : c.cfg.eps_list)
    for (double r : radii) {
      VolumeOptions vo;
      vo.samples = c.cfg.integer("samples", 50000);
      vo.seed = c.stream(k++);
      vo.nodes = c.cfg.nodes;
      const double d = doubling_ratio(EpsFrame(c.frame, eps), x, r, vo);
      t << c.frame.name << eps << r << d;
      t.end();
      c.scalar("doubling(" + tag(eps) + "," + tag(r) + ")", d);
      c.plot(eps, "r", r, "ratio", d);
      c.check("doubling finite (" + tag(eps) + "," + tag(r) + ")", std::isfinite(d));
    }
}

void run_poincare(Ctx& c) {
  const Vec x = c.center();
  const auto radii = c.cfg.numbers("radii", {0.25});
  Table t(c.m, "poincare.csv", {"eps", "r", "ratio", "argmax"});
  for (double eps : c.cfg.eps_list) {
    const EpsFrame ef(c.frame, eps);
    for (double r : radii) {
      const Lattice lat = c.box_or(ball_lattice(ef, x, 2.0 * r, c.cfg.nodes));
      const auto rep = poincare_ratio(ef, lat, x, r, default_test_functions(c.frame.n, x, r, c.seed));
      t << eps << r << rep.ratio << rep.argmax;
      t.end();
      c.scalar("poincare(" + tag(eps) + "," + tag(r) + ")", rep.ratio);
      c.plot(eps, "r", r, "ratio", rep.ratio);
    }
  }
}

CoeffMatrix coefficients(const Ctx& c) {
  const std::string a = c.cfg.text("A", "identity");
  if (a == "identity") return CoeffMatrix::identity(c.frame.p);
  const auto v = c.cfg.numbers("A", {});
  const int p = c.frame.p;
  if (static_cast<int>(v.size()) != p * p) fail(ErrorKind::ParseError, "A must be 'identity' or p*p numbers");
  CoeffMatrix A;
  A.A.resize(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) A.A(i, j) = v[static_cast<std::size_t>(i * p + j)];
  A.lambda = c.cfg.number("lambda", 1.0);
  return A;
}

void write_field(Ctx& c, const KernelField& k, const std::string& name) {
  std::vector<std::string> header;
  for (int j = 0; j < k.lattice.dim(); ++j) header.push_back("x" + std::to_string(j + 1));
  header.push_back("t");
  header.push_back("value");
  Table t(c.m, name, header, "field");
  for (std::size_t s = 0; s < k.times.size(); ++s)
    for (std::size_t z = 0; z < k.lattice.size(); ++z) {
      const Vec x = k.lattice.point(z);
      for (int j = 0; j < x.size(); ++j) t << x[j];
      t << k.times[s] << k.values[s][z];
      t.end();
    }
}

void run_heat(Ctx& c) {
  const Vec y = c.cfg.point("source", Vec::Zero(c.frame.n));
  const double tend = c.cfg.number("t", 0.1);
  const std::string method = c.cfg.text("method", "fd");
  if (method != "fd" && method != "mc" && method != "both") fail(ErrorKind::ParseError, "heat method must be fd, mc or both");
  const CoeffMatrix A = coefficients(c);
  Table t(c.m, "heat.csv", {"eps", "method", "t", "mass", "dt", "min_value", "l1_gap"});
  std::uint64_t k = 0;
  for (double eps : c.cfg.eps_list) {
    const EpsFrame ef(c.frame, eps);
    const Lattice lat = c.box_or(heat_lattice(ef, y, tend, c.cfg.nodes));
    std::optional<KernelField> fd, mc;
    if (method != "mc") {
      fd = heat_fd(ef, A, lat, y, tend, c.cfg.number("dt", 0.0));
      const double lo = *std::min_element(fd->values[0].begin(), fd->values[0].end());
      c.check("fd positivity (" + tag(eps) + ")", lo >= 0.0);
      write_field(c, *fd, "heat_fd_eps" + tag(eps) + ".csv");
      c.scalar("fd_mass(" + tag(eps) + ")", fd->mass[0]);
    }
    Lattice coarse = lat;
    if (method != "fd") {
      std::vector<Axis> ax = lat.axes();
      const int cn = std::max(5, (c.cfg.nodes / 3) | 1);
      for (Axis& a : ax) a.nodes = cn;
      coarse = Lattice(ax);
      mc = heat_mc(ef, coarse, y, tend, c.cfg.integer("paths", 100000), c.stream(k++));
      write_field(c, *mc, "heat_mc_eps" + tag(eps) + ".csv");
      c.scalar("mc_mass(" + tag(eps) + ")", mc->mass[0]);
    }
    double gap = NAN;
    if (fd && mc) {
      gap = relative_l1(restrict_kernel(*fd, coarse), *mc);
      c.scalar("l1_gap(" + tag(eps) + ")", gap);
      c.plot(eps, "t", tend, "l1_gap", gap);
    }
    for (const KernelField* kf : {fd ? &*fd : nullptr, mc ? &*mc : nullptr}) {
      if (!kf) continue;
      const double lo = *std::min_element(kf->values[0].begin(), kf->values[0].end());
      t << eps << kf->method << tend << kf->mass[0] << kf->dt << lo << gap;
      t.end();
      c.plot(eps, "t", tend, kf->method + "_mass", kf->mass[0]);
    }
  }
}

void run_gaussfit(Ctx& c) {
  const Vec y = c.cfg.point("source", Vec::Zero(c.frame.n));
  const auto times = c.cfg.numbers("t", {0.1});
  Table t(c.m, "gaussfit.csv", {"eps", "t", "C_lower", "C_upper", "C_lambda", "c_exp", "fit_residual", "bracketed", "points"});
  std::uint64_t k = 0;
  for (double eps : c.cfg.eps_list) {
    const EpsFrame ef(c.frame, eps);
    for (double tt : times) {
      const Lattice lat = heat_lattice(ef, y, tt, c.cfg.nodes);
      const KernelField kf = heat_fd(ef, CoeffMatrix::identity(c.frame.p), lat, y, tt);
      const Lattice solve = ball_lattice(ef, y, 3.0 * std::sqrt(tt), 41);
      const auto dist = c.table(ef, lat, y, solve);
      VolumeOptions vo;
      vo.samples = c.cfg.integer("samples", 50000);
      vo.seed = c.stream(k++);
      const double V = ball_volume_mc(ef, y, std::sqrt(tt), vo).volume;
      const GaussianFit f = gaussian_fit(kf, 0, dist, V, eps);
      t << eps << tt << f.C_lower << f.C_upper << f.C_lambda << f.c_exp_upper << f.fit_residual << f.bracketed
        << static_cast<double>(f.points);
      t.end();
      const std::string key = "(" + tag(eps) + "," + tag(tt) + ")";
      c.scalar("C_lambda" + key, f.C_lambda);
      c.scalar("bracketed" + key, f.bracketed);
      c.plot(eps, "t", tt, "C_lower", f.C_lower);
      c.plot(eps, "t", tt, "C_upper", f.C_upper);
      c.plot(eps, "t", tt, "C_lambda", f.C_lambda);
      c.check("envelopes bracket 98%" + key, f.bracketed >= 0.98);
    }
  }
}

void run_lift_check(Ctx& c) {
  if (c.frame.name != "heisenberg1") fail(ErrorKind::UnsupportedFrame, "lift-check is defined for heisenberg1 only");
  const double tt = c.cfg.number("t", 0.1);
  const long long paths = c.cfg.integer("paths", 400000);
  const double tol = c.cfg.number("tolerance", 0.10);
  const double probes[5][3] = {{0, 0, 0}, {0.3, 0, 0}, {0, 0.3, 0.1}, {-0.2, 0.2, -0.1}, {0.4, -0.3, 0.05}};
  Table t(c.m, "lift_check.csv", {"eps", "probe", "direct", "lifted", "rel_error"});
  std::uint64_t k = 0;
  for (double eps : c.cfg.eps_list) {
    const EpsFrame ef(c.frame, eps);
    const Lattice lat = heat_lattice(ef, Vec::Zero(3), tt, static_cast<int>(c.cfg.integer("lift_nodes", 21)));
    const KernelField direct = heat_mc(ef, lat, Vec::Zero(3), tt, paths, c.stream(k++));
    std::vector<Axis> ax = lat.axes();
    for (int j = 0; j < 3; ++j) ax.push_back(Axis{-6.0, 6.0, 3, false});
    PathOptions po;
    po.paths = paths;
    po.seed = c.stream(k++);
    const KernelField lifted = marginalize(lift_h1_kernel(eps, Lattice(ax), Vec::Zero(6), tt, po), 3);
    double worst = 0.0;
    for (const auto& p : probes) {
      Vec x(3);
      x << p[0], p[1], p[2];
      const double a = direct.sample(0, x), b = lifted.sample(0, x);
      const double rel = std::abs(b / a - 1.0);
      worst = std::max(worst, rel);
      t << eps << format_point(x) << a << b << rel;
      t.end();
    }
    c.scalar("lift_worst(" + tag(eps) + ")", worst);
    c.plot(eps, "t", tt, "lift_worst_rel", worst);
    c.check("lift probes within " + tag(tol) + " (" + tag(eps) + ")", worst <= tol);
  }
}

void run_harnack(Ctx& c) {
  const int n = c.frame.n;
  const double rho = c.cfg.number("rho", 0.15);
  const double tbar = c.cfg.number("tbar", 12.5 * rho * rho);
  const Vec xbar = c.center();
  Vec dflt = xbar;
  dflt[0] += 4.0 * rho;
  const Vec y = c.cfg.point("source", dflt);
  Table t(c.m, "harnack.csv", {"eps", "rho", "tbar", "sup_ratio", "mean_ratio", "ball_nodes"});
  for (double eps : c.cfg.eps_list) {
    const EpsFrame ef(c.frame, eps);
    const Lattice lat = c.box_or(ball_lattice(ef, xbar, c.cfg.number("reach", 7.0) * rho, c.cfg.nodes));
    std::vector<double> u0(lat.size(), 0.0);
    if (!lat.contains(y)) fail(ErrorKind::OutOfDomain, "harnack source outside the lattice");
    u0[lat.nearest(y)] = 1.0 / lat.cell_volume();
    const HarnackResult r = harnack_ratio(ef, coefficients(c), lat, u0, rho, xbar, tbar);
    t << eps << rho << tbar << r.sup_ratio << r.mean_ratio << static_cast<double>(r.ball_nodes);
    t.end();
    c.scalar("harnack(" + tag(eps) + ")", r.sup_ratio);
    c.plot(eps, "rho", rho, "sup_ratio", r.sup_ratio);
    c.plot(eps, "rho", rho, "mean_ratio", r.mean_ratio);
    c.check("harnack finite (" + tag(eps) + ")", std::isfinite(r.sup_ratio));
  }
  (void)n;
}

Lattice flow_box(const Ctx& c) {
  if (!c.cfg.box.empty()) return Lattice(c.cfg.box);
  return Lattice::cube(c.frame.n, -1.0, 1.0, c.cfg.nodes);
}

void run_flow(Ctx& c) {
  const FlowKind kind = parse_flow_kind(c.cfg.text("kind", "mcf"));
  const Expr phi_e = Expr::parse(c.cfg.text("phi", "x1^2"), c.frame.n);
  const ScalarFn phi = [phi_e](const Vec& x) { return phi_e.eval(x); };
  const double tend = c.cfg.number("t", 0.1);
  const Lattice lat = flow_box(c);
  Table t(c.m, "flow.csv", {"eps", "step", "t", "sup_u", "inf_u", "sup_grad1", "sup_grad1_edge", "sup_dudt", "energy"});
  for (double eps : c.cfg.eps_list) {
    const EpsFrame ef(c.frame, eps);
    const FlowState s0 = make_flow_state(lat, eps, kind, phi);
    const double lo = *std::min_element(s0.u.begin(), s0.u.end()), hi = *std::max_element(s0.u.begin(), s0.u.end());
    const FlowRun run = run_flow(ef, s0, tend, c.cfg.number("dt", 0.0));
    bool maximum = true;
    for (const FlowDiagnostics& d : run.history) {
      t << eps << static_cast<double>(d.step) << d.t << d.sup_u << d.inf_u << d.sup_grad1 << d.sup_grad1_edge
        << d.sup_dudt << d.energy;
      t.end();
      maximum = maximum && d.sup_u <= hi && d.inf_u >= lo;
    }
    const FlowDiagnostics& last = run.history.back();
    c.scalar("sup_grad1(" + tag(eps) + ")", last.sup_grad1);
    c.scalar("energy(" + tag(eps) + ")", last.energy);
    c.plot(eps, "t", last.t, "sup_grad1", last.sup_grad1);
    c.plot(eps, "t", last.t, "energy", last.energy);
    c.check("maximum principle (" + tag(eps) + ")", maximum);
  }
  if (c.cfg.eps_list.size() >= 2 && c.cfg.integer("study", 1) != 0) {
    const ConvergenceStudy st = eps_convergence_study(c.frame, lat, kind, phi, c.cfg.eps_list, tend);
    Table g(c.m, "flow_convergence.csv", {"eps_a", "eps_b", "gap"});
    for (std::size_t k = 0; k < st.gaps.size(); ++k) {
      g << st.eps[k] << st.eps[k + 1] << st.gaps[k];
      g.end();
      c.scalar("gap(" + tag(st.eps[k + 1]) + ")", st.gaps[k]);
      c.plot(st.eps[k + 1], "t", tend, "gap", st.gaps[k]);
    }
    c.scalar("violation_rate", st.violation_rate);
    c.check("convergence gaps monotone", st.monotone);
  }
}

void run_schauder(Ctx& c) {
  const int n = c.frame.n;
  // t is the last variable of the expression.
  const std::string wtext = std::regex_replace(c.cfg.text("w", "x1^2 + x2^2"), std::regex("\\bt\\b"),
                                               "x" + std::to_string(n + 1));
  const Expr w_e = Expr::parse(wtext, n + 1);
  const SpaceTimeFn w = [w_e, n](const Vec& x, double t) {
    Vec z(n + 1);
    z.head(n) = x;
    z[n] = t;
    return w_e.eval(z);
  };
  SchauderSetup s;
  s.lat = flow_box(c);
  s.times = c.cfg.numbers("times", {0.0, 0.05, 0.1, 0.15, 0.2});
  s.alpha = c.cfg.number("alpha", 0.5);
  s.holder.pairs = static_cast<std::size_t>(c.cfg.integer("pairs", 1000));
  s.holder.seed = c.seed;
  Table t(c.m, "schauder.csv", {"eps", "alpha", "c2a_norm", "ca_f_norm", "c1a_norm", "ratio"});
  for (double eps : c.cfg.eps_list) {
    const SchauderReport r = schauder_ratio(EpsFrame(c.frame, eps), {}, w, s);
    t << eps << r.alpha << r.c2a_norm << r.ca_f_norm << r.c1a_norm << r.ratio;
    t.end();
    c.scalar("ratio(" + tag(eps) + ")", r.ratio);
    c.plot(eps, "alpha", r.alpha, "ratio", r.ratio);
  }
}

void run_acceptance_suite(Ctx& c) {
  AcceptanceOptions o;
  o.seed = c.seed;
  o.threads = c.cfg.threads;
  o.rerun_threads = static_cast<int>(c.cfg.integer("rerun_threads", 3));
  for (double v : c.cfg.numbers("criteria", {})) o.only.push_back(static_cast<int>(v));
  Table t(c.m, "acceptance.csv", {"criterion", "name", "pass", "seconds", "detail"});
  const auto results = run_acceptance(o, [&](const CriterionResult& r) {
    std::printf("%s\n", r.line().c_str());
    std::fflush(stdout);
    std::string detail = r.error.empty() ? r.detail : r.error;
    std::replace(detail.begin(), detail.end(), ',', ';');
    t << static_cast<double>(r.id) << r.name << (r.pass ? "1" : "0") << r.seconds << "\"" + detail + "\"";
    t.end();
  });
  for (const CriterionResult& r : results) {
    c.check(std::to_string(r.id) + " " + r.name, r.pass, r.error.empty() ? r.detail : r.error);
    for (const auto& [k, v] : r.scalars) c.scalar(std::to_string(r.id) + ":" + k, v);
    c.plot(0.0, "criterion", r.id, "pass", r.pass ? 1.0 : 0.0);
  }
}

}  // namespace

ResultManifest run(const ExperimentConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  ResultManifest m;
  m.experiment = config.experiment;
  m.frame = config.frame;
  m.config_hash = config.hash();
  m.seed = *config.seed;
  m.out_dir = config.out_dir;
  fs::create_directories(config.out_dir);
  const int saved = num_threads();
  set_num_threads(config.threads);
  auto finish = [&]() {
    m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream(fs::path(config.out_dir) / "manifest.json") << m.to_json();
    set_num_threads(saved);
  };
  try {
    Ctx c{config, m, resolve_frame(config.frame), frame_identity(config.frame), *config.seed,
          (fs::path(config.out_dir) / "cache").string()};
    const std::string& e = config.experiment;
    if (e == "dist") run_dist(c);
    else if (e == "volume") run_volume(c);
    else if (e == "doubling") run_doubling(c);
    else if (e == "poincare") run_poincare(c);
    else if (e == "heat") run_heat(c);
    else if (e == "gaussfit") run_gaussfit(c);
    else if (e == "lift-check") run_lift_check(c);
    else if (e == "harnack") run_harnack(c);
    else if (e == "flow") run_flow(c);
    else if (e == "schauder") run_schauder(c);
    else run_acceptance_suite(c);
  } catch (const std::exception& ex) {
    m.error = config.experiment + ": " + ex.what();
    finish();
    throw;
  }
  finish();
  return m;
}

std::string emit_plot_data(const ResultManifest& manifest) {
  if (manifest.plot.empty()) fail(ErrorKind::ManifestIncomplete, "manifest has no plot rows");
  for (const OutputFile& o : manifest.outputs)
    if (!fs::exists(o.path)) fail(ErrorKind::ManifestIncomplete, "missing output " + o.path);
  const std::string path = (fs::path(manifest.out_dir) / ("plot_" + manifest.experiment + ".csv")).string();
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << "experiment,frame,eps,axis,x,quantity,value\n";
  for (const PlotRow& r : manifest.plot)
    out << manifest.experiment << "," << manifest.frame << "," << g17(r.eps) << "," << r.axis << "," << g17(r.x) << ","
        << r.quantity << "," << g17(r.value) << "\n";
  return path;
}

}  // namespace cclab
