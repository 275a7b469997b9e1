#include "cclab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cclab {

namespace {
constexpr std::size_t kBatch = 4096;

template <class F>
void for_each_tuple(int count, int n, F&& fn) {
  std::vector<int> I(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) I[static_cast<std::size_t>(k)] = k;
  if (n > count) return;
  for (;;) {
    fn(I);
    int k = n - 1;
    while (k >= 0 && I[static_cast<std::size_t>(k)] == count - n + k) --k;
    if (k < 0) return;
    ++I[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < n; ++j) I[static_cast<std::size_t>(j)] = I[static_cast<std::size_t>(j - 1)] + 1;
  }
}

double det_of(const FieldMatrix& F, const std::vector<int>& I) {
  const int n = static_cast<int>(F.rows());
  Jacobian M(n, n);
  for (int k = 0; k < n; ++k) M.col(k) = F.col(I[static_cast<std::size_t>(k)]);
  return M.determinant();
}

void check_ball_inside(const DistanceField& df, double r) {
  const Lattice& lat = df.lattice();
  for (std::size_t z = 0; z < lat.size(); ++z) {
    if (!lat.on_boundary(z) || !df.reached(z)) continue;
    if (df.try_value_at(lat.point(z)) < r)
      fail(ErrorKind::OutOfDomain, "ball of radius " + std::to_string(r) + " is not contained in the lattice box");
  }
}
}  // namespace

double lambda_det(const EpsFrame& ef, const std::vector<int>& I, const Vec& x) {
  if (static_cast<int>(I.size()) != ef.n()) fail(ErrorKind::InvalidParameter, "tuple length must equal n");
  for (int i : I)
    if (i < 0 || i >= ef.count()) fail(ErrorKind::InvalidParameter, "tuple index out of range");
  FieldMatrix F;
  ef.fields(x, F);
  return det_of(F, I);
}

double NswPolynomial::value_at(double r) const {
  double v = 0.0;
  for (const auto& t : terms) v += t.lambda * std::pow(r, t.degree);
  return v;
}

NswPolynomial nsw_polynomial(const EpsFrame& ef, const Vec& x) {
  FieldMatrix F;
  ef.fields(x, F);
  NswPolynomial poly;
  for_each_tuple(ef.count(), ef.n(), [&](const std::vector<int>& I) {
    const double l = std::abs(det_of(F, I));
    if (l <= 1e-13) return;
    NswTerm t;
    t.I = I;
    t.lambda = l;
    for (int i : I) t.degree += ef.eps_degree(i);
    poly.terms.push_back(std::move(t));
  });
  return poly;
}

double nsw_volume(const EpsFrame& ef, const Vec& x, double r) {
  if (!(r > 0.0)) fail(ErrorKind::InvalidParameter, "radius must be positive");
  return nsw_polynomial(ef, x).value_at(r);
}

std::vector<int> best_tuple(const EpsFrame& ef, const Vec& x, double r) {
  FieldMatrix F;
  ef.fields(x, F);
  std::vector<int> best;
  double bv = -1.0;
  for_each_tuple(ef.count(), ef.n(), [&](const std::vector<int>& I) {
    int d = 0;
    for (int i : I) d += ef.eps_degree(i);
    const double v = std::abs(det_of(F, I)) * std::pow(r, d);
    if (v > bv) bv = v, best = I;
  });
  return best;
}

VolumeEstimate ball_volume_mc(const DistanceField& df, double eps, double r, long long samples, std::uint64_t seed) {
  if (samples < 1) fail(ErrorKind::InvalidParameter, "sample count must be positive");
  if (!(r > 0.0)) fail(ErrorKind::InvalidParameter, "radius must be positive");
  check_ball_inside(df, r);
  const Lattice& lat = df.lattice();
  const int n = lat.dim();
  const std::size_t N = static_cast<std::size_t>(samples);
  const std::size_t batches = (N + kBatch - 1) / kBatch;
  std::vector<long long> hits(batches, 0);
  parallel_for(batches, [&](std::size_t b) {
    Engine eng = make_engine(seed, b);
    const std::size_t count = std::min(kBatch, N - b * kBatch);
    Vec y(n);
    long long h = 0;
    for (std::size_t s = 0; s < count; ++s) {
      for (int k = 0; k < n; ++k) {
        const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
        y[k] = lat.axis(k).lo + u * (lat.axis(k).hi - lat.axis(k).lo);
      }
      if (df.try_value_at(y) < r) ++h;
    }
    hits[b] = h;
  }, 1);
  long long total = 0;
  for (long long h : hits) total += h;
  const double p = static_cast<double>(total) / static_cast<double>(N);
  VolumeEstimate v;
  v.center = df.source();
  v.radius = r;
  v.eps = eps;
  v.volume = p * lat.box_volume();
  v.stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(N)) * lat.box_volume();
  v.sample_count = samples;
  v.method = "montecarlo";
  return v;
}

VolumeEstimate ball_volume_mc(const EpsFrame& ef, const Lattice& lat, const Vec& x, double r, long long samples,
                              std::uint64_t seed, const DistanceOptions& d) {
  DistanceOptions o = d;
  o.max_cost = std::min(o.max_cost, 1.5 * r);
  const DistanceField df = distance_field(ef, lat, x, o);
  return ball_volume_mc(df, ef.eps(), r, samples, seed);
}

VolumeEstimate ball_volume_mc(const EpsFrame& ef, const Vec& x, double r, const VolumeOptions& o) {
  const Lattice lat = ball_lattice(ef, x, r, o.nodes, o.distance);
  return ball_volume_mc(ef, lat, x, r, o.samples, o.seed, o.distance);
}

VolumeEstimate ball_volume_count(const DistanceField& df, double eps, double r) {
  check_ball_inside(df, r);
  const Lattice& lat = df.lattice();
  long long inside = 0;
  for (std::size_t z = 0; z < lat.size(); ++z)
    if (df.reached(z) && df.try_value_at(lat.point(z)) < r) ++inside;
  VolumeEstimate v;
  v.center = df.source();
  v.radius = r;
  v.eps = eps;
  v.volume = static_cast<double>(inside) * lat.cell_volume();
  v.sample_count = static_cast<long long>(lat.size());
  v.method = "lattice_count";
  return v;
}

double doubling_ratio(const EpsFrame& ef, const Lattice& lat, const Vec& x, double r, long long samples,
                      std::uint64_t seed, const DistanceOptions& d) {
  DistanceOptions o = d;
  o.max_cost = std::min(o.max_cost, 3.0 * r);
  const DistanceField df = distance_field(ef, lat, x, o);
  const double small = ball_volume_mc(df, ef.eps(), r, samples, seed).volume;
  const double big = ball_volume_mc(df, ef.eps(), 2.0 * r, samples, seed).volume;
  if (small <= 0.0) fail(ErrorKind::ResolutionTooCoarse, "no samples fell in the inner ball");
  return big / small;
}

double doubling_ratio(const EpsFrame& ef, const Vec& x, double r, const VolumeOptions& o) {
  const double small = ball_volume_mc(ef, x, r, o).volume;
  const double big = ball_volume_mc(ef, x, 2.0 * r, o).volume;
  if (small <= 0.0) fail(ErrorKind::ResolutionTooCoarse, "no samples fell in the inner ball");
  return big / small;
}

std::vector<TestFunction> default_test_functions(int n, const Vec& x0, double r, std::uint64_t seed) {
  std::vector<TestFunction> tests;
  for (int k = 0; k < n; ++k)
    tests.push_back({"x" + std::to_string(k + 1), [k, x0](const Vec& y) { return y[k] - x0[k]; }});
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      tests.push_back({"x" + std::to_string(i + 1) + "*x" + std::to_string(j + 1),
                       [i, j, x0](const Vec& y) { return (y[i] - x0[i]) * (y[j] - x0[j]); }});
  Engine eng = make_engine(seed, 0xb0b);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int b = 0; b < 3; ++b) {
    Vec c(n);
    for (int k = 0; k < n; ++k) c[k] = x0[k] + 0.5 * r * U(eng);
    const double s = r * (0.75 + 0.25 * U(eng));
    tests.push_back({"bump" + std::to_string(b + 1), [c, s](const Vec& y) {
                       return std::exp(-(y - c).squaredNorm() / (2.0 * s * s));
                     }});
  }
  const double delta = 0.1 * r;
  tests.push_back({"sign_x1", [x0, delta](const Vec& y) { return std::tanh((y[0] - x0[0]) / delta); }});
  return tests;
}

PoincareReport poincare_ratio(const EpsFrame& ef, const DistanceField& df, double r,
                              const std::vector<TestFunction>& tests) {
  if (!(r > 0.0)) fail(ErrorKind::InvalidParameter, "radius must be positive");
  const Lattice& lat = df.lattice();
  std::vector<std::size_t> inner, outer;
  std::vector<double> value(lat.size());
  parallel_for(lat.size(), [&](std::size_t z) { value[z] = df.try_value_at(lat.point(z)); }, 1024);
  for (std::size_t z = 0; z < lat.size(); ++z) {
    if (value[z] < r) inner.push_back(z);
    if (value[z] < 2.0 * r) {
      if (!lat.interior(z)) fail(ErrorKind::OutOfDomain, "doubled ball reaches the lattice boundary");
      outer.push_back(z);
    }
  }
  if (inner.empty()) fail(ErrorKind::ResolutionTooCoarse, "no lattice node inside the ball");
  PoincareReport rep;
  rep.ratio = 0.0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> u(lat.size());
  for (const auto& t : tests) {
    for (std::size_t z = 0; z < lat.size(); ++z) u[z] = t.f(lat.point(z));
    double mean = 0.0;
    for (auto z : inner) mean += u[z];
    mean /= static_cast<double>(inner.size());
    double num = 0.0, den = 0.0, scale = 0.0;
    for (auto z : inner) {
      num += std::abs(u[z] - mean);
      scale = std::max(scale, std::abs(u[z]));
    }
    std::vector<double> g(outer.size());
    parallel_for(outer.size(), [&](std::size_t k) { g[k] = horizontal_gradient(ef, lat, u, outer[k]).norm(); }, 256);
    for (double v : g) den += v;
    num *= lat.cell_volume();
    den *= r * lat.cell_volume();
    if (!(den > 1e-14 * std::max(1.0, scale) * lat.cell_volume()) || num <= 1e-14 * std::max(1.0, scale) * lat.cell_volume()) {
      rep.per_function.push_back(nan);
      continue;
    }
    const double ratio = num / den;
    rep.per_function.push_back(ratio);
    if (ratio > rep.ratio) rep.ratio = ratio, rep.argmax = t.name;
  }
  return rep;
}

PoincareReport poincare_ratio(const EpsFrame& ef, const Lattice& lat, const Vec& x, double r,
                              const std::vector<TestFunction>& tests, const DistanceOptions& d) {
  DistanceOptions o = d;
  o.max_cost = std::min(o.max_cost, 3.0 * r);
  return poincare_ratio(ef, distance_field(ef, lat, x, o), r, tests);
}

SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorKind::InsufficientData, "slope fit needs two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) fail(ErrorKind::InvalidParameter, "log-log fit needs positive data");
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a, sy += b, sxx += a * a, sxy += a * b, syy += b * b;
  }
  SlopeFit f;
  const double vx = sxx - sx * sx / n;
  f.slope = (sxy - sx * sy / n) / vx;
  f.intercept = (sy - f.slope * sx) / n;
  const double vy = syy - sy * sy / n;
  f.r2 = vy > 0 ? (f.slope * f.slope * vx) / vy : 1.0;
  return f;
}

}  // namespace cclab
