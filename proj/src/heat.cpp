#include "cclab/heat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace cclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Columns of a square root of A, so that sum_i c_i c_i^T = A.
Eigen::MatrixXd sqrt_coefficients(const CoeffMatrix& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.A);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd C = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  // Identity stays exactly the identity.
  if (A.A.isIdentity(0.0)) C = A.A;
  return C;
}

void check_coefficients(const EpsFrame& ef, const CoeffMatrix& A) {
  const int p = ef.base().p, m = ef.base().m;
  if (A.A.rows() != p || A.A.cols() != p) fail(ErrorKind::InvalidParameter, "coefficient matrix must be p x p");
  // At eps = 0 entries outside the horizontal block multiply vanishing fields.
  A.validate(m);
}

Vec combined_flow(const EpsFrame& ef, const Eigen::VectorXd& c, const Vec& x, double T, int substeps) {
  FieldMatrix F;
  auto vel = [&](const Vec& z) {
    ef.first_p_fields(z, F);
    return Vec(F * c);
  };
  const double dt = T / substeps;
  Vec z = x;
  for (int s = 0; s < substeps; ++s) {
    const Vec k1 = vel(z);
    const Vec k2 = vel(z + 0.5 * dt * k1);
    const Vec k3 = vel(z + 0.5 * dt * k2);
    const Vec k4 = vel(z + dt * k3);
    z += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return z;
}

/// Jump length along field v: at most `max_cells` cells in any coordinate
/// and at most `cap`, the one-cell length of the field at the lattice center.
double jump_length(const Lattice& lat, const Vec& v, double cap, double max_cells) {
  double s = 0.0;
  for (int k = 0; k < v.size(); ++k) s = std::max(s, std::abs(v[k]) / lat.h(k));
  if (s == 0.0) return kInf;
  return std::min(cap, max_cells / s);
}

double one_cell(const Lattice& lat, const Vec& v) {
  double s = 0.0;
  for (int k = 0; k < v.size(); ++k) s = std::max(s, std::abs(v[k]) / lat.h(k));
  return s > 0.0 ? 1.0 / s : kInf;
}

Vec lattice_center(const Lattice& lat) {
  Vec c(lat.dim());
  for (int k = 0; k < lat.dim(); ++k) c[k] = lat.coord(lat.size() / 2, k);
  return c;
}

/// Per-field caps evaluated at the central node.
std::vector<double> jump_caps(const EpsFrame& ef, const Eigen::MatrixXd& C, const Lattice& lat) {
  FieldMatrix F;
  ef.first_p_fields(lattice_center(lat), F);
  std::vector<double> caps;
  for (int i = 0; i < C.cols(); ++i) caps.push_back(one_cell(lat, F * C.col(i)));
  return caps;
}

constexpr double kMaxJumpCells = 4.0;

/// Generator of the jump chain: every node jumps to exp(+-lambda_i s_i)(x)
/// at rate 1/lambda_i^2 per sign; landing points are split multilinearly.
/// Stored by destination for a deterministic gather.
struct Generator {
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> col;
  std::vector<double> val;
  std::vector<double> out_rate;
  double max_rate = 0.0;
};

Generator build_generator(const EpsFrame& ef, const CoeffMatrix& A, const Lattice& lat) {
  check_coefficients(ef, A);
  if (lat.dim() != ef.n()) fail(ErrorKind::InvalidParameter, "lattice and frame dimensions differ");
  const Eigen::MatrixXd C = sqrt_coefficients(A);
  std::vector<int> fields;
  for (int i = 0; i < C.cols(); ++i) {
    bool live = false;
    for (int j = 0; j < C.rows(); ++j) live = live || (C(j, i) != 0.0 && ef.weight(j) != 0.0);
    if (live) fields.push_back(i);
  }
  const std::size_t N = lat.size();
  const std::size_t corners = std::size_t{1} << lat.dim();
  const std::size_t per_node = 2 * fields.size() * corners;
  std::vector<std::size_t> dest(N * per_node, Lattice::npos);
  std::vector<double> rate(N * per_node, 0.0);
  const std::vector<double> caps = jump_caps(ef, C, lat);
  Generator g;
  g.out_rate.assign(N, 0.0);
  parallel_for(N, [&](std::size_t z) {
    const Vec x = lat.point(z);
    FieldMatrix F;
    ef.first_p_fields(x, F);
    std::size_t slot = z * per_node;
    double out = 0.0;
    for (int i : fields) {
      const Eigen::VectorXd c = C.col(i);
      const Vec v = F * c;
      const double lambda = jump_length(lat, v, caps[static_cast<std::size_t>(i)], kMaxJumpCells);
      if (!std::isfinite(lambda)) {
        slot += 2 * corners;
        continue;
      }
      const double r = 1.0 / (lambda * lambda);
      for (double sign : {1.0, -1.0}) {
        out += r;
        const Vec landing = lat.wrap(combined_flow(ef, c, x, sign * lambda, 4));
        Stencil st;
        if (lat.interpolate(landing, st))
          for (int k = 0; k < st.count; ++k) {
            dest[slot + static_cast<std::size_t>(k)] = st.index[static_cast<std::size_t>(k)];
            rate[slot + static_cast<std::size_t>(k)] = r * st.weight[static_cast<std::size_t>(k)];
          }
        slot += corners;
      }
    }
    g.out_rate[z] = out;
  }, 64);
  for (double r : g.out_rate) g.max_rate = std::max(g.max_rate, r);
  g.row_ptr.assign(N + 1, 0);
  for (std::size_t e = 0; e < dest.size(); ++e)
    if (dest[e] != Lattice::npos) ++g.row_ptr[dest[e] + 1];
  for (std::size_t z = 0; z < N; ++z) g.row_ptr[z + 1] += g.row_ptr[z];
  g.col.resize(g.row_ptr[N]);
  g.val.resize(g.row_ptr[N]);
  std::vector<std::size_t> fill(g.row_ptr.begin(), g.row_ptr.end() - 1);
  for (std::size_t e = 0; e < dest.size(); ++e) {
    if (dest[e] == Lattice::npos) continue;
    const std::size_t at = fill[dest[e]]++;
    g.col[at] = e / per_node;
    g.val[at] = rate[e];
  }
  return g;
}

void check_times(const std::vector<double>& times) {
  if (times.empty()) fail(ErrorKind::InvalidParameter, "no output times");
  double prev = 0.0;
  for (double t : times) {
    if (!(t > prev) || !std::isfinite(t)) fail(ErrorKind::InvalidParameter, "output times must increase from 0");
    prev = t;
  }
}

KernelField run_chain(const EpsFrame& ef, const CoeffMatrix& A, const Lattice& lat, std::vector<double> u,
                      const HeatOptions& opts, bool mass_check) {
  check_times(opts.times);
  const Generator g = build_generator(ef, A, lat);
  const double bound = g.max_rate > 0.0 ? 1.0 / g.max_rate : kInf;
  double dt = opts.dt;
  if (dt < 0.0) fail(ErrorKind::InvalidParameter, "time step must be positive");
  if (dt > bound * (1.0 + 1e-12))
    fail(ErrorKind::StabilityError,
         "time step " + std::to_string(dt) + " exceeds the stability bound " + std::to_string(bound));
  if (dt == 0.0) dt = 0.9 * bound;
  const std::size_t N = lat.size();
  KernelField out;
  out.lattice = lat;
  out.times = opts.times;
  out.method = "fd";
  const double cv = lat.cell_volume();
  const double mass0 = std::accumulate(u.begin(), u.end(), 0.0) * cv;
  std::vector<double> next(N);
  double t = 0.0;
  double used_dt = 0.0;
  for (double target : opts.times) {
    const double span = target - t;
    const auto steps = static_cast<long long>(std::ceil(span / dt - 1e-9));
    const double h = span / static_cast<double>(std::max<long long>(steps, 1));
    used_dt = std::max(used_dt, h);
    for (long long s = 0; s < steps; ++s) {
      parallel_for(N, [&](std::size_t z) {
        double in = 0.0;
        for (std::size_t e = g.row_ptr[z]; e < g.row_ptr[z + 1]; ++e) in += g.val[e] * u[g.col[e]];
        next[z] = u[z] + h * (in - g.out_rate[z] * u[z]);
      }, 1024);
      u.swap(next);
    }
    t = target;
    const double mass = std::accumulate(u.begin(), u.end(), 0.0) * cv;
    if (mass_check && mass0 > 0.0 && mass < (1.0 - opts.max_mass_loss) * mass0)
      fail(ErrorKind::DomainTooSmall, "lost " + std::to_string(100.0 * (1.0 - mass / mass0)) +
                                          "% of the mass through the boundary by t = " + std::to_string(t));
    out.values.push_back(u);
    out.mass.push_back(mass);
  }
  out.dt = used_dt;
  return out;
}

}  // namespace

CoeffMatrix CoeffMatrix::identity(int p) {
  CoeffMatrix c;
  c.A = Eigen::MatrixXd::Identity(p, p);
  c.lambda = 1.0;
  return c;
}

void CoeffMatrix::validate(int m) const {
  if (A.rows() != A.cols() || A.rows() == 0) fail(ErrorKind::InvalidParameter, "coefficient matrix must be square");
  if (!(lambda >= 1.0)) fail(ErrorKind::InvalidParameter, "ellipticity constant must be >= 1");
  if (A != A.transpose()) fail(ErrorKind::InvalidParameter, "coefficient matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(A);
  const double tol = 1e-12;
  if (full.eigenvalues().minCoeff() < 0.5 / lambda - tol || full.eigenvalues().maxCoeff() > 2.0 * lambda + tol)
    fail(ErrorKind::InvalidParameter, "coefficient matrix violates the ellipticity bounds");
  if (m > 0 && m <= A.rows()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> hor(A.topLeftCorner(m, m));
    if (hor.eigenvalues().minCoeff() < 1.0 / lambda - tol || hor.eigenvalues().maxCoeff() > lambda + tol)
      fail(ErrorKind::InvalidParameter, "horizontal block violates the ellipticity bounds");
  }
}

Lattice heat_lattice(const EpsFrame& ef, const Vec& y, double t, int nodes, double reach) {
  if (!(t > 0.0) || !(reach > 0.0)) fail(ErrorKind::InvalidParameter, "time and reach must be positive");
  return ball_lattice(ef, y, reach * std::sqrt(t), nodes);
}

double heat_stability_bound(const EpsFrame& ef, const CoeffMatrix& A, const Lattice& lat) {
  check_coefficients(ef, A);
  const Eigen::MatrixXd C = sqrt_coefficients(A);
  const std::vector<double> caps = jump_caps(ef, C, lat);
  std::vector<double> rate(lat.size(), 0.0);
  parallel_for(lat.size(), [&](std::size_t z) {
    FieldMatrix F;
    ef.first_p_fields(lat.point(z), F);
    double r = 0.0;
    for (int i = 0; i < C.cols(); ++i) {
      const double l = jump_length(lat, F * C.col(i), caps[static_cast<std::size_t>(i)], kMaxJumpCells);
      if (std::isfinite(l)) r += 2.0 / (l * l);
    }
    rate[z] = r;
  });
  const double mx = *std::max_element(rate.begin(), rate.end());
  return mx > 0.0 ? 1.0 / mx : kInf;
}

KernelField heat_fd(const EpsFrame& ef, const CoeffMatrix& A, const Lattice& lat, const Vec& y,
                    const HeatOptions& opts) {
  if (!lat.contains(y)) fail(ErrorKind::OutOfDomain, "heat source " + format_point(y) + " outside lattice");
  std::vector<double> u0(lat.size(), 0.0);
  if (opts.smoothed_delta) {
    double total = 0.0;
    for (std::size_t z = 0; z < lat.size(); ++z) {
      const Vec x = lat.point(z);
      double e = 0.0;
      for (int k = 0; k < lat.dim(); ++k) {
        double d = x[k] - y[k];
        if (lat.axis(k).periodic) d = std::remainder(d, 2.0 * std::numbers::pi);
        e += 0.5 * (d / (2.0 * lat.h(k))) * (d / (2.0 * lat.h(k)));
      }
      u0[z] = std::exp(-e);
      total += u0[z];
    }
    for (double& v : u0) v /= total * lat.cell_volume();
  } else {
    u0[lat.nearest(y)] = 1.0 / lat.cell_volume();
  }
  KernelField k = run_chain(ef, A, lat, std::move(u0), opts, true);
  k.source = y;
  return k;
}

KernelField heat_fd(const EpsFrame& ef, const CoeffMatrix& A, const Lattice& lat, const Vec& y, double t_end,
                    double dt) {
  HeatOptions o;
  o.times = {t_end};
  o.dt = dt;
  return heat_fd(ef, A, lat, y, o);
}

KernelField heat_evolve(const EpsFrame& ef, const CoeffMatrix& A, const Lattice& lat,
                        const std::vector<double>& u0, const HeatOptions& opts) {
  if (u0.size() != lat.size()) fail(ErrorKind::InvalidParameter, "initial data size differs from the lattice");
  for (double v : u0)
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::InvalidParameter, "initial data must be finite and >= 0");
  return run_chain(ef, A, lat, u0, opts, false);
}

// ---------------------------------------------------------------------------
// Stochastic paths

KernelField heat_paths(const FieldFn& fields, int n, const Lattice& lat, const Vec& y, double t,
                       const PathOptions& opts) {
  if (opts.paths < 1 || opts.steps < 1) fail(ErrorKind::InvalidParameter, "path and step counts must be positive");
  if (!(t > 0.0)) fail(ErrorKind::InvalidParameter, "time must be positive");
  if (y.size() != n || lat.dim() > n) fail(ErrorKind::InvalidParameter, "source and lattice dimensions differ");
  const std::size_t P = static_cast<std::size_t>(opts.paths);
  constexpr std::size_t kBatch = 4096;
  const std::size_t batches = (P + kBatch - 1) / kBatch;
  const double dt = t / opts.steps;
  const double sd = std::sqrt(2.0 * dt);
  std::vector<double> ends(P * static_cast<std::size_t>(n));
  parallel_for(batches, [&](std::size_t b) {
    Engine eng = make_engine(opts.seed, b);
    std::normal_distribution<double> normal(0.0, 1.0);
    FieldMatrix F0, F1;
    Control dW;
    const std::size_t end = std::min(P, (b + 1) * kBatch);
    for (std::size_t path = b * kBatch; path < end; ++path) {
      Vec x = y;
      for (int s = 0; s < opts.steps; ++s) {
        fields(x, F0);
        dW.resize(F0.cols());
        for (int i = 0; i < F0.cols(); ++i) dW[i] = sd * normal(eng);
        const Vec pred = x + F0 * dW;
        fields(pred, F1);
        x += 0.5 * (F0 + F1) * dW;
      }
      for (int k = 0; k < n; ++k) ends[path * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)] = x[k];
    }
  }, 1);
  KernelField out;
  out.lattice = lat;
  out.source = y;
  out.times = {t};
  out.method = "mc";
  out.dt = dt;
  out.paths = opts.paths;
  out.seed = opts.seed;
  std::vector<double> mass(lat.size(), 0.0);
  const int d = lat.dim();
  Vec proj(d);
  Stencil st;
  double kept = 0.0;
  for (std::size_t path = 0; path < P; ++path) {
    for (int k = 0; k < d; ++k) proj[k] = ends[path * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)];
    if (!lat.interpolate(lat.wrap(proj), st)) continue;
    for (int c = 0; c < st.count; ++c) mass[st.index[static_cast<std::size_t>(c)]] += st.weight[static_cast<std::size_t>(c)];
    kept += 1.0;
  }
  const double norm = 1.0 / (static_cast<double>(P) * lat.cell_volume());
  for (double& v : mass) v *= norm;
  out.values.push_back(std::move(mass));
  out.mass.push_back(kept / static_cast<double>(P));
  return out;
}

KernelField heat_mc(const EpsFrame& ef, const Lattice& lat, const Vec& y, double t, long long paths,
                    std::uint64_t seed) {
  if (paths < 100000) fail(ErrorKind::InvalidParameter, "the path estimator needs at least 1e5 paths");
  if (lat.dim() != ef.n()) fail(ErrorKind::InvalidParameter, "lattice and frame dimensions differ");
  PathOptions o;
  o.paths = paths;
  o.seed = seed;
  return heat_paths([&ef](const Vec& x, FieldMatrix& F) { ef.active_fields(x, F); }, ef.n(), lat, y, t, o);
}

KernelField restrict_kernel(const KernelField& k, const Lattice& coarse) {
  if (coarse.dim() != k.lattice.dim()) fail(ErrorKind::InvalidParameter, "lattice dimensions differ");
  KernelField out = k;
  out.lattice = coarse;
  const Lattice& fine = k.lattice;
  for (std::size_t s = 0; s < k.values.size(); ++s) {
    std::vector<double> mass(coarse.size(), 0.0);
    Stencil st;
    for (std::size_t z = 0; z < fine.size(); ++z) {
      const double m = k.values[s][z] * fine.cell_volume();
      if (m == 0.0 || !coarse.interpolate(fine.point(z), st)) continue;
      for (int c = 0; c < st.count; ++c) mass[st.index[static_cast<std::size_t>(c)]] += m * st.weight[static_cast<std::size_t>(c)];
    }
    for (double& v : mass) v /= coarse.cell_volume();
    out.values[s] = std::move(mass);
  }
  return out;
}

double relative_l1(const KernelField& a, const KernelField& b) {
  if (a.lattice.size() != b.lattice.size()) fail(ErrorKind::InvalidParameter, "kernels live on different lattices");
  const auto& va = a.values[a.last()];
  const auto& vb = b.values[b.last()];
  double num = 0.0, den = 0.0;
  for (std::size_t z = 0; z < va.size(); ++z) {
    num += std::abs(va[z] - vb[z]);
    den += std::abs(vb[z]);
  }
  if (den <= 0.0) fail(ErrorKind::DegenerateDenominator, "reference kernel vanishes");
  return num / den;
}

// ---------------------------------------------------------------------------
// Heisenberg lift

Frame lifted_heisenberg_frame(double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) fail(ErrorKind::InvalidParameter, "eps must be finite and >= 0");
  Frame f;
  f.name = "lifted_heisenberg";
  f.n = 6, f.m = 5, f.p = 5, f.step = 1;
  f.degree.assign(5, 1);
  for (int k = 0; k < 6; ++k) f.domain.push_back(Axis{-2.0, 2.0, 3, false});
  f.eval = [eps](const Vec& x, FieldMatrix& o) {
    o.setZero();
    o(0, 0) = 1.0, o(2, 0) = -x[1];  // X1
    o(1, 1) = 1.0, o(2, 1) = x[0];   // X2
    o(3, 2) = 1.0, o(5, 2) = x[4];   // Z1
    o(4, 3) = 1.0, o(5, 3) = -x[3];  // Z2
    o(2, 4) = 2.0 * eps, o(5, 4) = 1.0;
  };
  f.jacobian = [](const Vec&, int i, Jacobian& J) {
    if (i == 0) J(2, 1) = -1.0;
    if (i == 1) J(2, 0) = 1.0;
    if (i == 2) J(5, 4) = 1.0;
    if (i == 3) J(5, 3) = -1.0;
  };
  return f;
}

KernelField lift_h1_kernel(double eps, const Lattice& lat6, const Vec& y6, double t, const PathOptions& opts) {
  if (!(eps > 0.0 && eps <= 1.0)) fail(ErrorKind::InvalidParameter, "lift needs eps in (0, 1]");
  if (lat6.dim() != 6) fail(ErrorKind::InvalidParameter, "lift lattice must be six-dimensional");
  const Frame f = lifted_heisenberg_frame(eps);
  return heat_paths([&f](const Vec& x, FieldMatrix& F) { f.fields(x, F); }, 6, lat6, y6, t, opts);
}

KernelField marginalize(const KernelField& k, int keep) {
  const Lattice& lat = k.lattice;
  if (keep < 1 || keep > lat.dim()) fail(ErrorKind::InvalidParameter, "invalid number of kept axes");
  std::vector<Axis> axes(lat.axes().begin(), lat.axes().begin() + keep);
  KernelField out = k;
  out.lattice = Lattice(axes);
  out.source = k.source.head(keep);
  double dz = 1.0;
  for (int a = keep; a < lat.dim(); ++a) dz *= lat.h(a);
  const std::size_t inner = lat.stride(keep - 1);  // nodes per kept index
  for (std::size_t s = 0; s < k.values.size(); ++s) {
    std::vector<double> v(out.lattice.size(), 0.0);
    for (std::size_t z = 0; z < lat.size(); ++z) v[z / inner] += k.values[s][z] * dz;
    out.values[s] = std::move(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian envelopes

std::vector<double> node_distances(const DistanceField& df, const Lattice& lat) {
  std::vector<double> d(lat.size());
  parallel_for(lat.size(), [&](std::size_t z) { d[z] = df.try_value_at(lat.point(z)); }, 512);
  return d;
}

namespace {

/// Smallest C >= 1 with g(C) >= target for increasing g.
template <class G>
double smallest_constant(G g, double target) {
  if (g(1.0) >= target) return 1.0;
  double lo = 1.0, hi = 2.0;
  while (g(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return kInf;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) >= target ? hi : lo) = mid;
  }
  return hi;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::min(v.size() - 1, idx == 0 ? 0 : idx - 1)];
}

}  // namespace

GaussianFit gaussian_fit(const KernelField& kernel, std::size_t k, const std::vector<double>& dist, double volume,
                         double eps, const FitOptions& opts) {
  const Lattice& lat = kernel.lattice;
  if (k >= kernel.times.size()) fail(ErrorKind::InvalidParameter, "time index out of range");
  if (dist.size() != lat.size()) fail(ErrorKind::InvalidParameter, "distance table size differs from the lattice");
  if (!(volume > 0.0)) fail(ErrorKind::InvalidParameter, "ball volume must be positive");
  const double t = kernel.times[k];
  const double R = opts.radius_factor * std::sqrt(t);
  std::vector<double> s, w;
  for (std::size_t z = 0; z < lat.size(); ++z) {
    const double P = kernel.values[k][z];
    if (!(dist[z] <= R) || !(P > opts.floor) || !lat.interior(z, opts.boundary_margin)) continue;
    s.push_back(dist[z] * dist[z] / t);
    w.push_back(std::log(P * volume));
  }
  if (s.size() < opts.min_points)
    fail(ErrorKind::InsufficientData, "only " + std::to_string(s.size()) + " points in the fit region");
  GaussianFit fit;
  fit.eps = eps;
  fit.t = t;
  fit.points = s.size();
  const double n = static_cast<double>(s.size());
  double ms = 0, mw = 0;
  for (std::size_t i = 0; i < s.size(); ++i) ms += s[i], mw += w[i];
  ms /= n, mw /= n;
  double sss = 0, ssw = 0;
  for (std::size_t i = 0; i < s.size(); ++i) sss += (s[i] - ms) * (s[i] - ms), ssw += (s[i] - ms) * (w[i] - mw);
  const double b = sss > 0.0 ? -ssw / sss : 0.0;
  const double a = mw + b * ms;
  std::vector<double> res(s.size()), cpt(s.size());
  double rss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    res[i] = w[i] - (a - b * s[i]);
    rss += res[i] * res[i];
    const double si = s[i], wi = w[i];
    const double up = smallest_constant([&](double C) { return std::log(C) - si / C; }, wi);
    const double lo = smallest_constant([&](double C) { return std::log(C) + C * si; }, -wi);
    cpt[i] = std::max(up, lo);
  }
  const double tail = 0.5 * (1.0 - opts.coverage);
  fit.c_exp_upper = fit.c_exp_lower = b;
  fit.C_upper = std::exp(a + quantile(res, 1.0 - tail));
  fit.C_lower = std::exp(a + quantile(res, tail));
  fit.fit_residual = std::sqrt(rss / n);
  fit.C_lambda = quantile(cpt, opts.coverage);
  std::size_t inside = 0;
  for (double c : cpt) inside += c <= fit.C_lambda ? 1 : 0;
  fit.bracketed = static_cast<double>(inside) / n;
  return fit;
}

// ---------------------------------------------------------------------------
// Harnack

std::vector<double> harnack_times(double rho, double tbar) {
  if (!(rho > 0.0)) fail(ErrorKind::InvalidParameter, "rho must be positive");
  const double r2 = rho * rho;
  if (!(tbar - 8.0 * r2 > 0.0)) fail(ErrorKind::InvalidParameter, "the lower cylinder must start after t = 0");
  std::vector<double> t;
  for (int i = 0; i < 5; ++i) t.push_back(tbar - 8.0 * r2 + r2 * i / 4.0);
  for (int i = 0; i < 5; ++i) t.push_back(tbar - r2 + r2 * i / 4.0);
  return t;
}

HarnackResult harnack_from_samples(const std::vector<std::vector<double>>& u, const std::vector<char>& ball) {
  if (u.size() != 10) fail(ErrorKind::InvalidParameter, "expected ten time samples");
  HarnackResult r;
  double sum = 0.0;
  std::size_t count = 0;
  double inf = kInf, sup = 0.0;
  for (std::size_t z = 0; z < ball.size(); ++z) {
    if (!ball[z]) continue;
    ++r.ball_nodes;
    for (std::size_t k = 0; k < 5; ++k) {
      sup = std::max(sup, u[k][z]);
      sum += u[k][z];
      ++count;
    }
    for (std::size_t k = 5; k < 10; ++k) inf = std::min(inf, u[k][z]);
  }
  if (r.ball_nodes == 0) fail(ErrorKind::ResolutionTooCoarse, "no lattice node inside the Harnack ball");
  if (!(inf > 1e-14)) fail(ErrorKind::DegenerateInfimum, "infimum over the upper cylinder vanishes");
  r.sup_minus = sup;
  r.inf_plus = inf;
  r.sup_ratio = sup / inf;
  r.mean_ratio = sum / static_cast<double>(count) / inf;
  return r;
}

HarnackResult harnack_ratio(const EpsFrame& ef, const CoeffMatrix& A, const Lattice& lat,
                            const std::vector<double>& u0, double rho, const Vec& xbar, double tbar) {
  HeatOptions o;
  o.times = harnack_times(rho, tbar);
  o.max_mass_loss = 1.0;  // the box edge is an absorbing boundary; any mass may leave
  DistanceOptions d;
  d.max_cost = 1.5 * rho;
  const DistanceField df = distance_field(ef, lat, xbar, d);
  std::vector<char> ball(lat.size(), 0);
  for (std::size_t z = 0; z < lat.size(); ++z) ball[z] = df.try_value_at(lat.point(z)) < rho ? 1 : 0;
  const KernelField k = heat_evolve(ef, A, lat, u0, o);
  return harnack_from_samples(k.values, ball);
}

}  // namespace cclab
