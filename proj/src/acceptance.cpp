#include "cclab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cclab/flows.hpp"
#include "cclab/geodesy.hpp"
#include "cclab/heat.hpp"
#include "cclab/measure.hpp"
#include "cclab/norms.hpp"

namespace cclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const char* const kNames[] = {
    "",
    "gauge-equivalence",
    "volume-scaling",
    "doubling-uniformity",
    "nsw-sandwich",
    "poincare-stability",
    "heat-kernel-sanity",
    "gaussian-envelope",
    "lifting-identity",
    "harnack-stability",
    "flow-properties",
    "schauder-stability",
    "determinism",
};

const double kBudget[] = {0, 300, 600, 600, 600, 300, 600, 900, 900, 600, 900, 600, 0};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string g4(double v) { return fmt("%.4g", v); }

double spread(const std::vector<double>& v) {
  double lo = kInf, hi = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x <= 0.0) return kInf;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return hi / lo;
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }
double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

struct Out {
  CriterionResult& r;
  void add(const std::string& name, double v) { r.scalars.emplace_back(name, v); }
  void note(const std::string& s) {
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += s;
  }
};

Frame heis() { return builtin_frame("heisenberg1"); }
Vec origin(int n) { return Vec::Zero(n); }

// ---------------------------------------------------------------------------

bool gauge_equivalence(Out& o, std::uint64_t seed) {
  const Frame h = heis();
  const int sources = 5, targets = 100;
  std::vector<double> A;
  for (double eps : {0.0, 0.05, 0.1, 0.2, 0.5, 1.0}) {
    const EpsFrame ef(h, eps);
    double worst = 1.0;
    for (int s = 0; s < sources; ++s) {
      Vec x(3);
      for (int k = 0; k < 3; ++k) x[k] = hash_uniform(seed, 1, static_cast<std::uint64_t>(3 * s + k)) - 0.5;
      std::vector<Axis> ax;
      for (int k = 0; k < 3; ++k) ax.push_back(Axis{x[k] - 1.3, x[k] + 1.3, 33, false});
      const DistanceField df = distance_field(ef, Lattice(ax), x);
      for (int j = 0; j < targets; ++j) {
        Vec y(3);
        for (int k = 0; k < 3; ++k)
          y[k] = hash_uniform(seed, 100 + static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(3 * j + k)) - 0.5;
        const double d = df.value_at(y), g = heis_gauge_distance(x, y, eps);
        worst = std::max({worst, d / g, g / d});
      }
    }
    A.push_back(worst);
    o.add("A(" + g4(eps) + ")", worst);
  }
  const double sp = spread(A), mx = max_of(A);
  o.note("A in [" + g4(min_of(A)) + ", " + g4(mx) + "], spread " + g4(sp) + " <= 2, max <= 10");
  return sp <= 2.0 && mx <= 10.0;
}

bool volume_scaling(Out& o, std::uint64_t seed) {
  const Frame h = heis();
  auto slope = [&](double eps, double r0, double r1, std::uint64_t stream) {
    const EpsFrame ef(h, eps);
    VolumeOptions vo;
    vo.samples = 50000;
    std::vector<double> r, v;
    for (int k = 0; k < 5; ++k) {
      r.push_back(r0 * std::pow(r1 / r0, k / 4.0));
      vo.seed = mix_seed(seed, stream + static_cast<std::uint64_t>(k));
      v.push_back(ball_volume_mc(ef, origin(3), r.back(), vo).volume);
    }
    return loglog_slope(r, v).slope;
  };
  const double s0 = slope(0.0, 0.05, 0.4, 10);
  const double s1 = slope(0.5, 0.01, 0.05, 20);
  o.add("slope(eps=0)", s0);
  o.add("slope(eps=0.5)", s1);
  o.note("eps=0 slope " + g4(s0) + " in [3.7, 4.3]; eps=0.5 slope " + g4(s1) + " in [2.6, 3.4]");
  return s0 >= 3.7 && s0 <= 4.3 && s1 >= 2.6 && s1 <= 3.4;
}

bool doubling_uniformity(Out& o, std::uint64_t seed) {
  const Frame h = heis();
  std::vector<double> D;
  for (double eps : {0.0, 0.05, 0.1, 0.2, 0.5, 1.0}) {
    VolumeOptions vo;
    vo.samples = 50000;
    vo.seed = mix_seed(seed, static_cast<std::uint64_t>(D.size()));
    D.push_back(doubling_ratio(EpsFrame(h, eps), origin(3), 0.2, vo));
    o.add("D(" + g4(eps) + ")", D.back());
  }
  const double d0 = D[0], mx = max_of(D);
  const bool finite = std::all_of(D.begin(), D.end(), [](double d) { return std::isfinite(d); });
  o.note("eps=0 ratio " + g4(d0) + " in [12, 20]; max " + g4(mx) + " <= 2 x eps=0 value");
  return finite && d0 >= 12.0 && d0 <= 20.0 && mx <= 2.0 * d0;
}

bool nsw_sandwich(Out& o, std::uint64_t seed) {
  const Frame h = heis();
  std::vector<double> q;
  for (double eps : {0.0, 0.1, 0.5, 1.0})
    for (double r : {0.1, 0.3, 1.0}) {
      const EpsFrame ef(h, eps);
      VolumeOptions vo;
      vo.samples = 50000;
      vo.seed = mix_seed(seed, q.size());
      q.push_back(ball_volume_mc(ef, origin(3), r, vo).volume / nsw_volume(ef, origin(3), r));
      o.add("V/nsw(" + g4(eps) + "," + g4(r) + ")", q.back());
    }
  const double sp = spread(q);
  o.note("V/nsw in [" + g4(min_of(q)) + ", " + g4(max_of(q)) + "], width " + g4(sp) + " <= 10");
  return sp <= 10.0;
}

bool poincare_stability(Out& o, std::uint64_t seed) {
  const Frame h = heis();
  const double r = 0.25;
  std::vector<double> P;
  for (double eps : {0.0, 0.05, 0.2, 0.5, 1.0}) {
    const EpsFrame ef(h, eps);
    const Lattice lat = ball_lattice(ef, origin(3), 2.0 * r, 41);
    const auto rep = poincare_ratio(ef, lat, origin(3), r, default_test_functions(3, origin(3), r, seed));
    P.push_back(rep.ratio);
    o.add("P(" + g4(eps) + ")", rep.ratio);
  }
  const double sp = spread(P);
  o.note("max ratio in [" + g4(min_of(P)) + ", " + g4(max_of(P)) + "], variation " + g4(sp) + " <= 2");
  return sp <= 2.0;
}

bool heat_sanity(Out& o, std::uint64_t seed) {
  // Euclidean plane against the closed Gaussian.
  const double t = 0.1;
  const EpsFrame e2(builtin_frame("euclidean2"), 0.0);
  const Lattice lat = Lattice::cube(2, -2.0, 2.0, 121);
  const KernelField k = heat_fd(e2, CoeffMatrix::identity(2), lat, origin(2), t);
  double err = 0.0, peak = 0.0;
  for (std::size_t z = 0; z < lat.size(); ++z) {
    const Vec x = lat.point(z);
    const double g = std::exp(-x.squaredNorm() / (4.0 * t)) / (4.0 * M_PI * t);
    err = std::max(err, std::abs(k.values[0][z] - g));
    peak = std::max(peak, g);
  }
  const double sup_err = err / peak, mass_err = std::abs(k.mass[0] - 1.0);
  o.add("euclid_sup_err", sup_err);
  o.add("euclid_mass_err", mass_err);

  // Heisenberg, eps = 0.3: finite differences against sample paths.
  const EpsFrame ef(heis(), 0.3);
  const Lattice fine({Axis{-2.4, 2.4, 49, false}, Axis{-2.4, 2.4, 49, false}, Axis{-1.6, 1.6, 97, false}});
  const Lattice coarse({Axis{-2.4, 2.4, 17, false}, Axis{-2.4, 2.4, 17, false}, Axis{-1.6, 1.6, 17, false}});
  const KernelField fd = heat_fd(ef, CoeffMatrix::identity(3), fine, origin(3), t);
  const KernelField mc = heat_mc(ef, coarse, origin(3), t, 400000, mix_seed(seed, 6));
  const double l1 = relative_l1(restrict_kernel(fd, coarse), mc);
  o.add("h1_fd_mc_l1", l1);
  o.note("euclidean sup error " + g4(sup_err) + " <= 0.02, mass error " + g4(mass_err) + " <= 0.01, H1 FD-MC L1 " +
         g4(l1) + " <= 0.1");
  return sup_err <= 0.02 && mass_err <= 0.01 && l1 <= 0.10;
}

bool gaussian_envelope(Out& o, std::uint64_t seed) {
  const Frame h = heis();
  const double t = 0.1;
  std::vector<double> C;
  double worst_bracket = 1.0;
  for (double eps : {0.0, 0.1, 0.3, 1.0}) {
    const EpsFrame ef(h, eps);
    const Lattice lat = heat_lattice(ef, origin(3), t, 41);
    const KernelField k = heat_fd(ef, CoeffMatrix::identity(3), lat, origin(3), t);
    const DistanceField df = distance_field(ef, ball_lattice(ef, origin(3), 3.0 * std::sqrt(t), 41), origin(3));
    VolumeOptions vo;
    vo.samples = 50000;
    vo.seed = mix_seed(seed, C.size());
    const double V = ball_volume_mc(ef, origin(3), std::sqrt(t), vo).volume;
    const GaussianFit f = gaussian_fit(k, 0, node_distances(df, lat), V, eps);
    C.push_back(f.C_lambda);
    worst_bracket = std::min(worst_bracket, f.bracketed);
    o.add("C_lambda(" + g4(eps) + ")", f.C_lambda);
    o.add("bracketed(" + g4(eps) + ")", f.bracketed);
  }
  const double sp = spread(C);
  o.note("C_lambda in [" + g4(min_of(C)) + ", " + g4(max_of(C)) + "], factor " + g4(sp) + " <= 3; bracketed >= " +
         g4(worst_bracket) + " (need 0.98)");
  return sp <= 3.0 && worst_bracket >= 0.98;
}

bool lifting_identity(Out& o, std::uint64_t seed) {
  const double t = 0.1;
  const double probes[5][3] = {{0, 0, 0}, {0.3, 0, 0}, {0, 0.3, 0.1}, {-0.2, 0.2, -0.1}, {0.4, -0.3, 0.05}};
  double worst = 0.0;
  for (double eps : {0.3, 1.0}) {
    const EpsFrame ef(heis(), eps);
    const Lattice lat = heat_lattice(ef, origin(3), t, 21);
    const KernelField direct = heat_mc(ef, lat, origin(3), t, 400000, mix_seed(seed, eps == 1.0 ? 2 : 1));
    std::vector<Axis> ax = lat.axes();
    for (int k = 0; k < 3; ++k) ax.push_back(Axis{-6.0, 6.0, 3, false});
    PathOptions po;
    po.paths = 400000;
    po.seed = mix_seed(seed, eps == 1.0 ? 12 : 11);
    const KernelField lifted = marginalize(lift_h1_kernel(eps, Lattice(ax), origin(6), t, po), 3);
    for (const auto& p : probes) {
      Vec x(3);
      x << p[0], p[1], p[2];
      const double a = direct.sample(0, x), b = lifted.sample(0, x);
      const double rel = std::abs(b / a - 1.0);
      worst = std::max(worst, rel);
      o.add("rel(" + g4(eps) + "," + format_point(x) + ")", rel);
    }
  }
  o.note("worst probe relative error " + g4(worst) + " <= 0.1");
  return worst <= 0.10;
}

bool harnack_stability(Out& o, std::uint64_t) {
  // Heisenberg sweep: point mass 4 rho away from the cylinder axis.
  const double rho = 0.15, tbar = 12.5 * rho * rho;
  std::vector<double> H;
  for (double eps : {0.0, 0.1, 0.3, 1.0}) {
    const EpsFrame ef(heis(), eps);
    const Lattice lat = ball_lattice(ef, origin(3), 7.0 * rho, 61);
    Vec y = origin(3);
    y[0] = 4.0 * rho;
    std::vector<double> u0(lat.size(), 0.0);
    u0[lat.nearest(y)] = 1.0 / lat.cell_volume();
    H.push_back(harnack_ratio(ef, CoeffMatrix::identity(3), lat, u0, rho, origin(3), tbar).sup_ratio);
    o.add("H(" + g4(eps) + ")", H.back());
  }
  const double sp = spread(H);

  // Euclidean control against the Gaussian evaluated on the same nodes.
  const EpsFrame e2(builtin_frame("euclidean2"), 0.0);
  const Lattice lat = Lattice::cube(2, -3.0, 3.0, 121);
  Vec y(2);
  y << 1.0, 0.0;
  std::vector<double> u0(lat.size(), 0.0);
  u0[lat.nearest(y)] = 1.0 / lat.cell_volume();
  const double r2 = 0.2, t2 = 0.5;
  const double fd = harnack_ratio(e2, CoeffMatrix::identity(2), lat, u0, r2, origin(2), t2).sup_ratio;
  const auto times = harnack_times(r2, t2);
  double sup = 0.0, inf = kInf;
  for (std::size_t z = 0; z < lat.size(); ++z) {
    const Vec x = lat.point(z);
    if (!(x.norm() < r2)) continue;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double g = std::exp(-(x - y).squaredNorm() / (4.0 * times[k])) / (4.0 * M_PI * times[k]);
      if (k < 5) sup = std::max(sup, g);
      else inf = std::min(inf, g);
    }
  }
  const double closed = sup / inf, rel = std::abs(fd / closed - 1.0);
  o.add("euclid_fd", fd);
  o.add("euclid_closed", closed);
  o.note("H1 ratio in [" + g4(min_of(H)) + ", " + g4(max_of(H)) + "], factor " + g4(sp) + " <= 2; euclidean " + g4(fd) +
         " vs closed form " + g4(closed) + " (rel " + g4(rel) + " <= 0.05)");
  return sp <= 2.0 && rel <= 0.05;
}

bool flow_properties(Out& o, std::uint64_t) {
  const Frame h = heis();
  const Lattice lat = Lattice::cube(3, -1.0, 1.0, 21);
  auto bump = [](const Vec& x) { return std::exp(-4.0 * x.squaredNorm()); };
  auto above = [](const Vec& x) {
    Vec c(3);
    c << 0.3, -0.2, 0.1;
    return std::exp(-4.0 * x.squaredNorm()) + 0.1 * std::exp(-6.0 * (x - c).squaredNorm());
  };
  bool maximum = true, comparison = true, energy = true;
  double worst_rise = -kInf;
  for (FlowKind kind : {FlowKind::MeanCurvature, FlowKind::TotalVariation})
    for (double eps : {1.0, 0.1}) {
      const EpsFrame ef(h, eps);
      FlowState a = make_flow_state(lat, eps, kind, bump), b = make_flow_state(lat, eps, kind, above);
      const double lo = *std::min_element(a.u.begin(), a.u.end()), hi = *std::max_element(a.u.begin(), a.u.end());
      const double dt = 0.9 * flow_stability_bound(ef, lat);
      double e_prev = flow_diagnostics(ef, a).energy;
      while (a.t < 0.05) {
        a = flow_step(ef, a, dt);
        b = flow_step(ef, b, dt);
        for (std::size_t i = 0; i < lat.size(); ++i) {
          if (a.u[i] < lo || a.u[i] > hi) maximum = false;
          if (a.u[i] > b.u[i]) comparison = false;
        }
        if (kind == FlowKind::TotalVariation) {
          const double e = flow_diagnostics(ef, a).energy;
          worst_rise = std::max(worst_rise, e - e_prev);
          if (e > e_prev + 1e-8) energy = false;
          e_prev = e;
        }
      }
    }
  o.add("maximum_principle", maximum ? 1.0 : 0.0);
  o.add("comparison_principle", comparison ? 1.0 : 0.0);
  o.add("tv_worst_energy_rise", worst_rise);

  auto phi = [](const Vec& x) { return x[0] * x[0]; };
  const std::vector<double> eps_list = {1.0, 0.5, 0.25, 0.1, 0.05};
  double phi_grad = 0.0;
  {
    const EpsFrame e1(h, 1.0);
    phi_grad = flow_diagnostics(e1, make_flow_state(lat, 1.0, FlowKind::MeanCurvature, phi)).sup_grad1;
  }
  bool monotone = true;
  double grad_max = 0.0;
  for (FlowKind kind : {FlowKind::MeanCurvature, FlowKind::TotalVariation}) {
    const ConvergenceStudy st = eps_convergence_study(h, lat, kind, phi, eps_list, 0.1);
    monotone = monotone && st.monotone;
    for (std::size_t k = 0; k < st.gaps.size(); ++k) o.add(std::string(to_string(kind)) + "_gap" + std::to_string(k), st.gaps[k]);
    for (const FlowState& s : st.states) {
      const double g = flow_diagnostics(EpsFrame(h, s.eps), s).sup_grad1;
      grad_max = std::max(grad_max, std::isfinite(g) ? g : kInf);
    }
  }
  o.add("sup_grad1_max", grad_max);
  o.add("sup_grad1_phi", phi_grad);
  o.note(std::string("maximum principle ") + (maximum ? "exact" : "violated") + ", comparison " +
         (comparison ? "exact" : "violated") + ", TV energy rise " + g4(worst_rise) + " <= 1e-8, sup|grad_1 u| " +
         g4(grad_max) + " <= 2 x " + g4(phi_grad) + ", gaps " + (monotone ? "monotone" : "not monotone"));
  return maximum && comparison && energy && grad_max <= 2.0 * phi_grad && monotone;
}

bool schauder_stability(Out& o, std::uint64_t seed) {
  auto w = [](const Vec& x, double t) {
    return std::exp(-t) * (x[0] * x[0] + x[1] * x[1]) + 0.3 * std::sin(x[0] + 0.5 * x[2]) * std::cos(x[1]) +
           0.2 * t * x[2];
  };
  const std::vector<double> eps_list = {1.0, 0.5, 0.2, 0.1, 0.05, 0.0};
  std::vector<double> coarse, fine;
  double worst_refine = 0.0;
  for (double eps : eps_list) {
    const EpsFrame ef(heis(), eps);
    SchauderSetup s;
    s.times = {0.0, 0.05, 0.1, 0.15, 0.2};
    s.holder.seed = seed;
    s.lat = Lattice::cube(3, -1.0, 1.0, 21);
    coarse.push_back(schauder_ratio(ef, {}, w, s).ratio);
    s.lat = Lattice::cube(3, -1.0, 1.0, 41);
    fine.push_back(schauder_ratio(ef, {}, w, s).ratio);
    worst_refine = std::max(worst_refine, std::abs(fine.back() / coarse.back() - 1.0));
    o.add("ratio_h(" + g4(eps) + ")", coarse.back());
    o.add("ratio_h/2(" + g4(eps) + ")", fine.back());
  }
  double m = 0.0, v = 0.0;
  for (double r : fine) m += r;
  m /= static_cast<double>(fine.size());
  for (double r : fine) v += (r - m) * (r - m);
  const double cv = std::sqrt(v / static_cast<double>(fine.size())) / m;
  o.add("cv", cv);
  o.note("ratio in [" + g4(min_of(fine)) + ", " + g4(max_of(fine)) + "], CV " + g4(cv) + " <= 0.6, refinement change " +
         g4(worst_refine) + " <= 0.2");
  return cv <= 0.6 && worst_refine <= 0.2;
}

using CriterionFn = bool (*)(Out&, std::uint64_t);
const CriterionFn kCriteria[] = {nullptr,           gauge_equivalence,  volume_scaling,    doubling_uniformity,
                                 nsw_sandwich,      poincare_stability, heat_sanity,       gaussian_envelope,
                                 lifting_identity,  harnack_stability,  flow_properties,   schauder_stability};

}  // namespace

std::string CriterionResult::digest() const {
  std::string s;
  char buf[64];
  for (const auto& [k, v] : scalars) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    s += k + "=" + buf + "\n";
  }
  if (!error.empty()) s += "error=" + error + "\n";
  return s;
}

std::string CriterionResult::line() const {
  std::string s = pass ? "[PASS] " : "[FAIL] ";
  s += std::to_string(id) + " " + name + ": ";
  s += error.empty() ? detail : "error: " + error;
  char buf[96];
  if (budget_seconds > 0.0) std::snprintf(buf, sizeof buf, " (%.1f s, limit %.0f s)", seconds, budget_seconds);
  else std::snprintf(buf, sizeof buf, " (%.1f s)", seconds);
  return s + buf;
}

int criterion_count() { return 12; }

std::string criterion_name(int id) {
  if (id < 1 || id > 12) fail(ErrorKind::InvalidParameter, "no acceptance criterion " + std::to_string(id));
  return kNames[id];
}

CriterionResult run_criterion(int id, std::uint64_t seed) {
  if (id < 1 || id > 11) fail(ErrorKind::InvalidParameter, "criterion " + std::to_string(id) + " is not a single run");
  CriterionResult r;
  r.id = id;
  r.name = kNames[id];
  r.budget_seconds = kBudget[id];
  Out o{r};
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = kCriteria[id](o, mix_seed(seed, static_cast<std::uint64_t>(id)));
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = ok && r.error.empty() && r.seconds <= r.budget_seconds;
  if (ok && r.seconds > r.budget_seconds) o.note("runtime over the limit");
  return r;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& report) {
  std::vector<int> ids = opts.only;
  if (ids.empty())
    for (int i = 1; i <= 12; ++i) ids.push_back(i);
  for (int id : ids) criterion_name(id);
  const bool determinism = std::find(ids.begin(), ids.end(), 12) != ids.end();

  const int saved = num_threads();
  set_num_threads(opts.threads);
  std::vector<CriterionResult> out;
  for (int id : ids) {
    if (id == 12) continue;
    out.push_back(run_criterion(id, opts.seed));
    if (report) report(out.back());
  }
  if (determinism) {
    CriterionResult r;
    r.id = 12;
    r.name = kNames[12];
    const auto t0 = std::chrono::steady_clock::now();
    set_num_threads(opts.rerun_threads);
    std::size_t same = 0;
    std::string differing;
    for (const CriterionResult& first : out) {
      const CriterionResult again = run_criterion(first.id, opts.seed);
      const bool eq = again.digest() == first.digest() && !first.scalars.empty();
      same += eq ? 1 : 0;
      if (!eq) differing += (differing.empty() ? "" : ",") + std::to_string(first.id);
      r.scalars.emplace_back("identical(" + std::to_string(first.id) + ")", eq ? 1.0 : 0.0);
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.pass = same == out.size() && !out.empty();
    r.detail = std::to_string(same) + "/" + std::to_string(out.size()) + " criteria byte-identical between " +
               std::to_string(opts.threads) + " and " + std::to_string(opts.rerun_threads) + " threads";
    if (!differing.empty()) r.detail += " (differ: " + differing + ")";
    out.push_back(r);
    if (report) report(out.back());
  }
  set_num_threads(saved);
  return out;
}

}  // namespace cclab
