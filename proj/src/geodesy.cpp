#include "cclab/geodesy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace cclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;
// Area of the regular octagon with unit side.
const double kOctagonArea = 2.0 * (1.0 + std::sqrt(2.0));

/// Difference b - a with periodic components mapped into (-pi, pi].
Vec periodic_diff(const std::vector<Axis>& axes, const Vec& b, const Vec& a) {
  Vec d = b - a;
  for (int k = 0; k < d.size() && k < static_cast<int>(axes.size()); ++k) {
    if (!axes[static_cast<std::size_t>(k)].periodic) continue;
    d[k] = std::remainder(d[k], 2.0 * kPi);
  }
  return d;
}

std::vector<Control> unit_controls(int q, int m, const DistanceOptions& o) {
  std::vector<Control> dirs;
  auto push = [&](const Control& u) { dirs.push_back(u / u.norm()); };
  if (q == 1) {
    push(Control::Constant(1, 1.0));
    push(Control::Constant(1, -1.0));
  } else if (q == 2) {
    for (int k = 0; k < o.ring_directions; ++k) {
      const double a = 2.0 * kPi * k / o.ring_directions;
      Control u(2);
      u << std::cos(a), std::sin(a);
      push(u);
    }
  } else {
    // Horizontal rings first: near eps = 0 the weighted brackets are slow and
    // the paths are almost horizontal.
    for (int i = 0; i < m && i < q; ++i)
      for (int j = i + 1; j < m && j < q; ++j)
        for (int k = 0; k < o.ring_directions; ++k) {
          const double a = 2.0 * kPi * k / o.ring_directions;
          if (k % (o.ring_directions / 4 > 0 ? o.ring_directions / 4 : 1) == 0) continue;  // axes added below
          Control u = Control::Zero(q);
          u[i] = std::cos(a), u[j] = std::sin(a);
          push(u);
        }
    for (int i = 0; i < q; ++i)
      for (double s : {1.0, -1.0}) {
        Control u = Control::Zero(q);
        u[i] = s;
        push(u);
      }
    if (q == 3) {
      // Fibonacci sphere
      const int N = o.sphere_directions;
      const double golden = kPi * (3.0 - std::sqrt(5.0));
      for (int k = 0; k < N; ++k) {
        const double z = 1.0 - (2.0 * k + 1.0) / N;
        const double r = std::sqrt(1.0 - z * z);
        Control u(3);
        u << r * std::cos(golden * k), r * std::sin(golden * k), z;
        push(u);
      }
    } else {
      for (int i = 0; i < q; ++i)
        for (int j = i + 1; j < q; ++j)
          for (double si : {1.0, -1.0})
            for (double sj : {1.0, -1.0}) {
              Control u = Control::Zero(q);
              u[i] = si, u[j] = sj;
              push(u);
            }
    }
  }
  return dirs;
}

double speed_in_cells(const Lattice& lat, const Vec& v) {
  double s = 0.0;
  for (int k = 0; k < v.size(); ++k) s = std::max(s, std::abs(v[k]) / lat.h(k));
  return s;
}

}  // namespace

const char* to_string(DistanceMethod m) {
  switch (m) {
    case DistanceMethod::LatticeDijkstra: return "lattice_dijkstra";
    case DistanceMethod::ControlOpt: return "control_opt";
    case DistanceMethod::GaugeProxy: return "gauge_proxy";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Flows

Vec flow(const EpsFrame& ef, const Vec& x, const Control& u, double T, int substeps) {
  FieldMatrix F;
  auto vel = [&](const Vec& z) {
    ef.active_fields(z, F);
    return Vec(F * u);
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

Vec flow_fields(const Frame& f, const Vec& x, const Control& coeff, double T, int substeps) {
  FieldMatrix F;
  auto vel = [&](const Vec& z) {
    f.fields(z, F);
    return Vec(F * coeff);
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

// ---------------------------------------------------------------------------
// DistanceField

Vec DistanceField::position(std::size_t node) const {
  return Eigen::Map<const Eigen::VectorXd>(pos_.data() + node * static_cast<std::size_t>(n_), n_);
}

bool DistanceField::reached(std::size_t node) const { return std::isfinite(cost_[node]); }

double DistanceField::corner_value(std::size_t node, const Vec& y) const {
  const Vec P = position(node);
  const Vec d = periodic_diff(lat_.axes(), y, P);
  if (node == source_node_ && cost_[node] == 0.0) {
    // least-norm control from the source itself
    const Eigen::MatrixXd F = source_fields_;
    const Eigen::VectorXd u = F.completeOrthogonalDecomposition().solve(Eigen::VectorXd(d));
    return u.norm();
  }
  const Vec v = Eigen::Map<const Eigen::VectorXd>(vel_.data() + node * static_cast<std::size_t>(n_), n_);
  const double vv = v.squaredNorm();
  const double corr = vv > 0.0 ? d.dot(v) / vv : 0.0;
  return std::max(0.0, cost_[node] + corr);
}

double DistanceField::try_value_at(const Vec& y) const {
  if (periodic_diff(lat_.axes(), y, source_).norm() == 0.0) return 0.0;
  Stencil st;
  if (!lat_.interpolate(y, st)) return kInf;
  double num = 0.0, den = 0.0;
  for (int c = 0; c < st.count; ++c) {
    const std::size_t node = st.index[static_cast<std::size_t>(c)];
    if (!reached(node)) continue;
    const double w = st.weight[static_cast<std::size_t>(c)];
    num += w * corner_value(node, y);
    den += w;
  }
  if (den <= 0.0) return kInf;
  return num / den;
}

double DistanceField::value_at(const Vec& y) const {
  if (!lat_.contains(y)) fail(ErrorKind::OutOfDomain, "query point " + format_point(y) + " outside lattice");
  const double v = try_value_at(y);
  if (!std::isfinite(v))
    fail(ErrorKind::ResolutionTooCoarse, "no lattice path reaches the cell of " + format_point(y));
  return v;
}

std::vector<Vec> DistanceField::witness(const Vec& y) const {
  Stencil st;
  std::vector<Vec> path;
  if (!lat_.interpolate(y, st)) return path;
  std::size_t best = Lattice::npos;
  double bv = kInf;
  for (int c = 0; c < st.count; ++c) {
    const std::size_t node = st.index[static_cast<std::size_t>(c)];
    if (!reached(node)) continue;
    const double v = corner_value(node, y);
    if (v < bv) bv = v, best = node;
  }
  if (best == Lattice::npos) return path;
  for (std::int64_t z = static_cast<std::int64_t>(best); z >= 0; z = pred_[static_cast<std::size_t>(z)])
    path.push_back(position(static_cast<std::size_t>(z)));
  std::reverse(path.begin(), path.end());
  path.push_back(y);
  return path;
}

DistanceField distance_field(const EpsFrame& ef, const Lattice& lat, const Vec& x, const DistanceOptions& o) {
  if (lat.dim() != ef.n()) fail(ErrorKind::InvalidParameter, "lattice and frame dimensions differ");
  if (!lat.contains(x)) fail(ErrorKind::OutOfDomain, "source " + format_point(x) + " outside lattice");
  DistanceField df;
  df.lat_ = lat;
  df.n_ = lat.dim();
  df.source_ = lat.wrap(x);
  const int n = df.n_;
  const std::size_t N = lat.size();
  df.cost_.assign(N, kInf);
  df.pos_.assign(N * static_cast<std::size_t>(n), 0.0);
  df.vel_.assign(N * static_cast<std::size_t>(n), 0.0);
  df.pred_.assign(N, -1);
  ef.active_fields(df.source_, df.source_fields_);
  std::vector<char> settled(N, 0);

  const int q = ef.q();
  const std::vector<Control> dirs = unit_controls(q, ef.base().m, o);
  // horizontal pairs for bracket loops
  std::vector<std::pair<int, int>> pairs;
  if (o.bracket_moves && ef.base().p > ef.base().m) {
    const int m = ef.base().m;
    for (int a = 0; a < q; ++a)
      for (int b = a + 1; b < q; ++b)
        if (ef.active()[static_cast<std::size_t>(a)] < m && ef.active()[static_cast<std::size_t>(b)] < m)
          pairs.emplace_back(a, b);
  }

  // Labels compete by their estimate at the node itself, cost plus the
  // first-order correction along the arrival velocity.
  std::vector<double> key(N, kInf);
  auto store = [&](std::size_t z, const Vec& P, const Vec& v, double c, std::int64_t pred) {
    df.cost_[z] = c;
    for (int k = 0; k < n; ++k) {
      df.pos_[z * n + k] = P[k];
      df.vel_[z * n + k] = v[k];
    }
    df.pred_[z] = pred;
  };

  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  df.source_node_ = lat.nearest(df.source_);
  store(df.source_node_, df.source_, Vec::Zero(n), 0.0, -1);
  key[df.source_node_] = 0.0;
  heap.emplace(0.0, df.source_node_);

  FieldMatrix F, FQ;
  auto relax = [&](std::size_t from, const Vec& Q, double c, const Control& u_last) {
    if (!lat.contains(Q)) return;
    const Vec Qw = lat.wrap(Q);
    const std::size_t to = lat.nearest(Qw);
    if (to == Lattice::npos || settled[to]) return;
    ef.active_fields(Qw, FQ);
    Vec v = FQ * u_last;
    const double vv = v.squaredNorm();
    const Vec d = periodic_diff(lat.axes(), lat.point(to), Qw);
    const double k = std::max(0.0, c + (vv > 0.0 ? d.dot(v) / vv : 0.0));
    if (k >= key[to]) return;
    key[to] = k;
    store(to, Qw, v, c, static_cast<std::int64_t>(from));
    heap.emplace(k, to);
  };

  while (!heap.empty()) {
    const auto [kk, z] = heap.top();
    heap.pop();
    if (settled[z] || kk > key[z]) continue;
    settled[z] = 1;
    ++df.settled_;
    const double c = df.cost_[z];
    if (c > o.max_cost) continue;
    const Vec P = df.position(z);
    ef.active_fields(P, F);
    for (const auto& u : dirs) {
      const double sc = speed_in_cells(lat, F * u);
      if (sc < 1e-14) continue;
      for (double kappa : o.step_cells) {
        const double s = kappa / sc;
        df.max_edge_ = std::max(df.max_edge_, s);
        relax(z, flow(ef, P, u, s, o.substeps), c + s, u);
      }
    }
    for (const auto& [a, b] : pairs) {
      const Vec B = ef.active_jacobian(b, P) * F.col(a) - ef.active_jacobian(a, P) * F.col(b);
      const double bc = speed_in_cells(lat, B);
      if (bc < 1e-14) continue;
      for (double kappa : o.loop_cells) {
        const double tau = std::sqrt(kappa / (kOctagonArea * bc));
        for (double orient : {1.0, -1.0}) {
          Vec Q = P;
          Control u = Control::Zero(q);
          for (int k = 0; k < 8; ++k) {
            const double ang = 2.0 * kPi * k / 8.0;
            u.setZero();
            u[a] = std::cos(ang);
            u[b] = orient * std::sin(ang);
            Q = flow(ef, Q, u, tau, 1);
          }
          df.max_edge_ = std::max(df.max_edge_, 8.0 * tau);
          relax(z, Q, c + 8.0 * tau, u);
        }
      }
    }
  }
  return df;
}

DistanceResult dist_lattice(const EpsFrame& ef, const Lattice& lat, const Vec& x, const Vec& y,
                            const DistanceOptions& opts) {
  if (!lat.contains(x) || !lat.contains(y))
    fail(ErrorKind::OutOfDomain, "endpoints must lie in the lattice box");
  DistanceResult r;
  r.method = DistanceMethod::LatticeDijkstra;
  if (periodic_diff(lat.axes(), y, x).norm() == 0.0) {
    r.value = 0.0;
    r.upper_bound_flag = true;
    r.witness_path = {x};
    return r;
  }
  const DistanceField df = distance_field(ef, lat, x, opts);
  r.value = df.value_at(y);
  r.witness_path = df.witness(y);
  if (r.witness_path.size() >= 2) {
    const Vec& last = r.witness_path[r.witness_path.size() - 2];
    r.upper_bound_flag = periodic_diff(lat.axes(), y, last).norm() == 0.0;
  }
  return r;
}

Lattice ball_lattice(const EpsFrame& ef, const Vec& x, double R, int nodes, const DistanceOptions& opts) {
  if (!(R > 0.0)) fail(ErrorKind::InvalidParameter, "ball radius must be positive");
  if (nodes < 5) fail(ErrorKind::InvalidParameter, "ball lattice needs at least 5 nodes per axis");
  if (nodes % 2 == 0) ++nodes;
  const int n = ef.n();
  const Frame& base = ef.base();
  FieldMatrix F;
  ef.active_fields(x, F);
  Vec ext = Vec::Zero(n);
  for (int a = 0; a < ef.q(); ++a) ext += R * F.col(a).cwiseAbs();
  FieldMatrix Y;
  base.fields(x, Y);
  for (int i = 0; i < base.m; ++i)
    for (int j = i + 1; j < base.m; ++j) {
      const Vec b = base.field_jacobian(j, x) * Y.col(i) - base.field_jacobian(i, x) * Y.col(j);
      ext += R * R * b.cwiseAbs();
    }
  ext *= 1.5;
  for (int k = 0; k < n; ++k)
    if (!(ext[k] > 0.0)) ext[k] = R;

  const int pilot_nodes = 21;
  auto make = [&](const Vec& e, int nn) {
    std::vector<Axis> axes;
    for (int k = 0; k < n; ++k) {
      const Axis& dom = base.domain[static_cast<std::size_t>(k)];
      if (dom.periodic && e[k] >= kPi) axes.push_back(Axis{dom.lo, dom.hi, nn - 1, true});
      else axes.push_back(Axis{x[k] - e[k], x[k] + e[k], nn, false});
    }
    return Lattice(axes);
  };

  DistanceOptions po = opts;
  po.max_cost = R;
  for (int attempt = 0; attempt < 12; ++attempt) {
    const Lattice pilot = make(ext, pilot_nodes);
    const DistanceField df = distance_field(ef, pilot, x, po);
    Vec reach = Vec::Zero(n);
    std::vector<bool> touch(static_cast<std::size_t>(n), false);
    for (std::size_t z = 0; z < pilot.size(); ++z) {
      if (!(df.cost(z) <= R)) continue;
      const Vec d = periodic_diff(pilot.axes(), df.position(z), x);
      reach = reach.cwiseMax(d.cwiseAbs());
      for (int k = 0; k < n; ++k) {
        if (pilot.axis(k).periodic) continue;
        const int i = pilot.coord_index(z, k);
        if (i == 0 || i == pilot.axis(k).nodes - 1) touch[static_cast<std::size_t>(k)] = true;
      }
    }
    bool any = false;
    for (int k = 0; k < n; ++k)
      if (touch[static_cast<std::size_t>(k)]) ext[k] *= 2.0, any = true;
    if (any) continue;
    Vec fitted(n);
    for (int k = 0; k < n; ++k) {
      const double hk = pilot.h(k);
      fitted[k] = 1.25 * reach[k] + 2.0 * hk;
      if (pilot.axis(k).periodic) fitted[k] = kPi;
    }
    // A loose pilot box leaves the fit dominated by the pilot spacing; shrink
    // and solve again.
    bool loose = false;
    for (int k = 0; k < n; ++k)
      if (!pilot.axis(k).periodic && fitted[k] < 0.5 * ext[k]) loose = true;
    if (loose && attempt < 11) {
      ext = fitted;
      continue;
    }
    return make(fitted, nodes);
  }
  fail(ErrorKind::ResolutionTooCoarse, "could not fit a lattice around the ball");
}

// ---------------------------------------------------------------------------
// Control shooting

namespace {

struct Shooter {
  const EpsFrame& ef;
  Vec x, y;
  int K, q, substeps;
  std::vector<Axis> axes;

  Vec endpoint(const Eigen::VectorXd& U) const {
    Vec z = x;
    for (int k = 0; k < K; ++k) z = flow(ef, z, Control(U.segment(k * q, q)), 1.0 / K, substeps);
    return z;
  }
  Eigen::VectorXd residual(const Eigen::VectorXd& U) const {
    return Eigen::VectorXd(periodic_diff(axes, y, endpoint(U)));
  }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& U) const {
    const int N = K * q;
    Eigen::MatrixXd J(x.size(), N);
    const Vec base = endpoint(U);
    for (int c = 0; c < N; ++c) {
      const double h = 1e-7 * (1.0 + std::abs(U[c]));
      Eigen::VectorXd Up = U;
      Up[c] += h;
      J.col(c) = Eigen::VectorXd(periodic_diff(axes, endpoint(Up), base)) / h;
    }
    return J;
  }
  static Eigen::VectorXd min_norm(const Eigen::MatrixXd& J, const Eigen::VectorXd& r) {
    Eigen::MatrixXd M = J * J.transpose();
    const double lam = 1e-12 * std::max(1.0, M.trace());
    M.diagonal().array() += lam;
    return J.transpose() * M.ldlt().solve(r);
  }
  double length(const Eigen::VectorXd& U) const {
    double L = 0.0;
    for (int k = 0; k < K; ++k) L += U.segment(k * q, q).norm();
    return L / K;
  }
  // Gauss-Newton onto the endpoint constraint; returns final residual norm.
  double project(Eigen::VectorXd& U, double tol) const {
    Eigen::VectorXd r = residual(U);
    double rn = r.norm();
    for (int it = 0; it < 30 && rn > tol; ++it) {
      const Eigen::VectorXd d = min_norm(jacobian(U), r);
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
        const Eigen::VectorXd Ut = U + alpha * d;
        const Eigen::VectorXd rt = residual(Ut);
        if (rt.norm() < rn) {
          U = Ut, r = rt, rn = rt.norm();
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    return rn;
  }
};

}  // namespace

DistanceResult dist_control(const EpsFrame& ef, const Vec& x, const Vec& y, int segments, const ControlOptions& o) {
  if (segments < 4) fail(ErrorKind::InvalidParameter, "control shooting needs at least 4 segments");
  if (x.size() != ef.n() || y.size() != ef.n()) fail(ErrorKind::InvalidParameter, "point dimension mismatch");
  const Frame& base = ef.base();
  if (!base.in_domain(x) || !base.in_domain(y)) fail(ErrorKind::OutOfDomain, "endpoints outside frame domain");
  DistanceResult best;
  best.method = DistanceMethod::ControlOpt;
  const Vec dxy = periodic_diff(base.domain, y, x);
  if (dxy.norm() == 0.0) {
    best.value = 0.0;
    best.upper_bound_flag = true;
    best.witness_path = {x};
    return best;
  }
  Shooter sh{ef, x, y, segments, ef.q(), o.substeps, base.domain};
  const double diam = base.diameter();
  const double accept_tol = 1e-4 * diam;
  const double fine_tol = 1e-11 * diam;
  const int N = segments * sh.q;

  FieldMatrix F0;
  ef.active_fields(x, F0);
  const Eigen::MatrixXd F0d = F0;
  const Eigen::VectorXd lin = F0d.completeOrthogonalDecomposition().solve(Eigen::VectorXd(dxy));
  const double scale = lin.norm() + std::sqrt(dxy.norm());

  best.value = kInf;
  best.converged = false;
  best.endpoint_error = kInf;
  Engine rng = make_engine(o.seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int start = 0; start <= o.restarts; ++start) {
    Eigen::VectorXd U(N);
    if (start == 0) {
      for (int k = 0; k < segments; ++k) U.segment(k * sh.q, sh.q) = lin;
    } else {
      for (int c = 0; c < N; ++c) U[c] = scale * normal(rng);
    }
    double rn = sh.project(U, fine_tol);
    if (rn <= accept_tol) {
      // descend the control energy along the constraint manifold
      for (int it = 0; it < o.max_iterations; ++it) {
        const Eigen::MatrixXd J = sh.jacobian(U);
        Eigen::VectorXd g = U - Shooter::min_norm(J, J * U);
        if (g.norm() < 1e-10 * (1.0 + U.norm())) break;
        bool improved = false;
        for (double beta = 1.0; beta > 1e-4; beta *= 0.5) {
          Eigen::VectorXd Ut = U - beta * g;
          const double rt = sh.project(Ut, fine_tol);
          if (rt <= std::max(rn, fine_tol) * 1.0000001 + 1e-300 && Ut.squaredNorm() < U.squaredNorm() * (1.0 - 1e-12)) {
            U = Ut, rn = rt;
            improved = true;
            break;
          }
        }
        if (!improved) break;
      }
    }
    const double L = sh.length(U);
    const bool ok = rn <= accept_tol;
    const bool better = ok ? (!best.converged || L < best.value) : (!best.converged && rn < best.endpoint_error);
    if (better) {
      best.value = L;
      best.converged = ok;
      best.endpoint_error = rn;
      best.witness_path.clear();
      Vec z = x;
      best.witness_path.push_back(z);
      for (int k = 0; k < segments; ++k) {
        z = flow(ef, z, Control(U.segment(k * sh.q, sh.q)), 1.0 / segments, o.substeps);
        best.witness_path.push_back(z);
      }
    }
  }
  best.upper_bound_flag = best.converged;
  return best;
}

// ---------------------------------------------------------------------------
// Gauges

double gauge_heis(const Vec& x) {
  const double a = x[0] * x[0] + x[1] * x[1];
  return std::pow(a * a + x[2] * x[2], 0.25);
}

double gauge_heis_eps(const Vec& x, double eps) {
  const double a = x[0] * x[0] + x[1] * x[1];
  const double z = std::abs(x[2]);
  const double v = eps > 0.0 ? std::min(z, z * z / (eps * eps)) : z;
  return std::sqrt(a + v);
}

Vec heis_left_difference(const Vec& y, const Vec& x) {
  Vec d(3);
  d << x[0] - y[0], x[1] - y[1], x[2] - y[2] + y[1] * x[0] - y[0] * x[1];
  return d;
}

double heis_gauge_distance(const Vec& x, const Vec& y, double eps) {
  return gauge_heis_eps(heis_left_difference(y, x), eps);
}

// ---------------------------------------------------------------------------
// Exponential coordinates

std::vector<int> exp_basis(const Frame& frame, const Vec& x0) {
  FieldMatrix F;
  frame.fields(x0, F);
  std::vector<int> basis;
  Eigen::MatrixXd M(frame.n, 0);
  const double scale = std::max(1e-300, F.norm());
  for (int i = 0; i < frame.p && static_cast<int>(basis.size()) < frame.n; ++i) {
    Eigen::MatrixXd T(frame.n, M.cols() + 1);
    T << M, F.col(i);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(T);
    if (svd.singularValues()[T.cols() - 1] > 1e-10 * scale) {
      M = T;
      basis.push_back(i);
    }
  }
  if (static_cast<int>(basis.size()) < frame.n)
    fail(ErrorKind::CoordinateFailure, "fields do not span at " + format_point(x0));
  return basis;
}

Vec exp_map(const Frame& frame, const std::vector<int>& basis, const Vec& x0, const Vec& c) {
  Control coeff = Control::Zero(frame.p);
  for (std::size_t i = 0; i < basis.size(); ++i) coeff[basis[i]] = c[static_cast<int>(i)];
  return flow_fields(frame, x0, coeff, 1.0, 64);
}

ExpCoords exp_coords(const Frame& frame, const Vec& x0, const Vec& x) {
  ExpCoords out;
  out.x0 = x0;
  out.basis = exp_basis(frame, x0);
  const int n = frame.n;
  const Vec target = periodic_diff(frame.domain, x, x0);
  if (target.norm() == 0.0) {
    out.coords = Vec::Zero(n);
    out.residual = 0.0;
    return out;
  }
  FieldMatrix F;
  frame.fields(x0, F);
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i) B.col(i) = F.col(out.basis[static_cast<std::size_t>(i)]);
  Eigen::VectorXd c = B.fullPivLu().solve(Eigen::VectorXd(target));
  auto resid = [&](const Eigen::VectorXd& cc) {
    return Eigen::VectorXd(periodic_diff(frame.domain, x, exp_map(frame, out.basis, x0, Vec(cc))));
  };
  const double diam = frame.diameter();
  Eigen::VectorXd r = resid(c);
  for (int it = 0; it < 50 && r.norm() > 1e-14 * diam; ++it) {
    Eigen::MatrixXd J(n, n);
    for (int k = 0; k < n; ++k) {
      const double h = 1e-7 * (1.0 + std::abs(c[k]));
      Eigen::VectorXd cp = c, cm = c;
      cp[k] += h;
      cm[k] -= h;
      J.col(k) = (resid(cm) - resid(cp)) / (2.0 * h);
    }
    const Eigen::VectorXd d = J.fullPivLu().solve(r);
    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
      const Eigen::VectorXd ct = c + alpha * d;
      const Eigen::VectorXd rt = resid(ct);
      if (rt.norm() < r.norm()) {
        c = ct, r = rt, moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  out.coords = c;
  out.residual = r.norm();
  if (!(out.residual <= 1e-8 * diam))
    fail(ErrorKind::CoordinateFailure, "exponential coordinates of " + format_point(x) + " did not converge");
  return out;
}

namespace {
double graded_term(double c, int d, double eps) {
  const double a = std::abs(c);
  const double root = std::pow(a, 1.0 / d);
  if (eps <= 0.0) return root;
  return std::min(a / std::pow(eps, d - 1), root);
}
}  // namespace

double quasi_norm_equiregular(const Frame& frame, const Vec& x0, const Vec& x, double eps) {
  if (eps < 0.0) fail(ErrorKind::InvalidParameter, "eps must be >= 0");
  const ExpCoords ec = exp_coords(frame, x0, x);
  double horiz = 0.0, rest = 0.0;
  for (std::size_t i = 0; i < ec.basis.size(); ++i) {
    const int idx = ec.basis[i];
    const double c = ec.coords[static_cast<int>(i)];
    if (idx < frame.m) horiz += c * c;
    else rest += graded_term(c, frame.degree[static_cast<std::size_t>(idx)], eps);
  }
  return std::sqrt(horiz) + rest;
}

bool box_ball_membership(const Frame& frame, const Vec& x0, const Vec& x, double r, double eps) {
  if (eps < 0.0) fail(ErrorKind::InvalidParameter, "eps must be >= 0");
  const ExpCoords ec = exp_coords(frame, x0, x);
  double mx = 0.0;
  for (std::size_t i = 0; i < ec.basis.size(); ++i) {
    const int idx = ec.basis[i];
    const double c = ec.coords[static_cast<int>(i)];
    mx = std::max(mx, idx < frame.m ? std::abs(c) : graded_term(c, frame.degree[static_cast<std::size_t>(idx)], eps));
  }
  return mx < r;
}

DistanceResult dist_gauge_proxy(const EpsFrame& ef, const Vec& x, const Vec& y) {
  DistanceResult r;
  r.method = DistanceMethod::GaugeProxy;
  const Frame& f = ef.base();
  if (f.name == "heisenberg1") r.value = heis_gauge_distance(y, x, ef.eps());
  else if (f.name.rfind("euclidean", 0) == 0) r.value = (y - x).norm();
  else r.value = quasi_norm_equiregular(f, x, y, ef.eps());
  return r;
}

}  // namespace cclab
