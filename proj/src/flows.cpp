#include "cclab/flows.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cclab {

namespace {

Vec flow_along(const EpsFrame& ef, const Eigen::VectorXd& c, const Vec& x, double T) {
  FieldMatrix F;
  auto vel = [&](const Vec& z) {
    ef.first_p_fields(z, F);
    return Vec(F * c);
  };
  constexpr int kSubsteps = 2;
  const double dt = T / kSubsteps;
  Vec z = x;
  for (int s = 0; s < kSubsteps; ++s) {
    const Vec k1 = vel(z);
    const Vec k2 = vel(z + 0.5 * dt * k1);
    const Vec k3 = vel(z + 0.5 * dt * k2);
    const Vec k4 = vel(z + dt * k3);
    z += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return z;
}

Vec clamp_to_box(const Lattice& lat, const Vec& x) {
  Vec y = lat.wrap(x);
  for (int k = 0; k < lat.dim(); ++k) {
    const Axis& a = lat.axis(k);
    if (!a.periodic) y[k] = std::clamp(y[k], a.lo, a.hi);
  }
  return y;
}

/// Square root of the coefficient matrix in closed form.
Eigen::MatrixXd coefficient_root(FlowKind kind, const Control& xi) {
  const int p = static_cast<int>(xi.size());
  const double n2 = xi.squaredNorm();
  const double W = std::sqrt(1.0 + n2);
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(p, p);
  if (n2 > 0.0) {
    const Eigen::VectorXd v = xi;
    C -= (1.0 - 1.0 / W) * (v * v.transpose()) / n2;
  }
  if (kind == FlowKind::TotalVariation) C /= std::sqrt(W);
  return C;
}

double grad1_norm(const EpsFrame& riem, const Lattice& lat, const std::vector<double>& u, std::size_t z) {
  return horizontal_gradient(riem, lat, u, z).norm();
}

}  // namespace

const char* to_string(FlowKind k) { return k == FlowKind::TotalVariation ? "tv" : "mcf"; }

FlowKind parse_flow_kind(const std::string& s) {
  if (s == "tv") return FlowKind::TotalVariation;
  if (s == "mcf") return FlowKind::MeanCurvature;
  fail(ErrorKind::InvalidParameter, "flow kind must be tv or mcf, got '" + s + "'");
}

FlowState make_flow_state(const Lattice& lat, double eps, FlowKind kind, const ScalarFn& phi,
                          bool extend_from_boundary) {
  FlowState s;
  s.lat = lat;
  s.eps = eps;
  s.kind = kind;
  const std::size_t N = lat.size();
  s.boundary.resize(N);
  s.dirichlet.resize(N);
  for (std::size_t z = 0; z < N; ++z) {
    s.boundary[z] = phi(lat.point(z));
    if (!std::isfinite(s.boundary[z])) fail(ErrorKind::InvalidParameter, "boundary data is not finite");
    s.dirichlet[z] = lat.interior(z, 1) ? 0 : 1;
  }
  s.u = s.boundary;
  if (extend_from_boundary) {
    double mean = 0.0;
    std::size_t count = 0;
    for (std::size_t z = 0; z < N; ++z)
      if (s.dirichlet[z]) mean += s.boundary[z], ++count;
    if (count > 0) mean /= static_cast<double>(count);
    for (std::size_t z = 0; z < N; ++z)
      if (!s.dirichlet[z]) s.u[z] = mean;
    std::vector<double> next = s.u;
    const int n = lat.dim();
    for (int sweep = 0; sweep < 200; ++sweep) {
      for (std::size_t z = 0; z < N; ++z) {
        if (s.dirichlet[z]) continue;
        double num = 0.0, den = 0.0;
        for (int k = 0; k < n; ++k) {
          const double w = 1.0 / (lat.h(k) * lat.h(k));
          num += w * (s.u[lat.shift(z, k, 1)] + s.u[lat.shift(z, k, -1)]);
          den += 2.0 * w;
        }
        next[z] = num / den;
      }
      s.u.swap(next);
    }
  }
  return s;
}

Eigen::MatrixXd flow_coefficients(FlowKind kind, const Control& xi) {
  const int p = static_cast<int>(xi.size());
  const Eigen::VectorXd v = xi;
  const double W2 = 1.0 + v.squaredNorm();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(p, p) - v * v.transpose() / W2;
  if (kind == FlowKind::TotalVariation) a /= std::sqrt(W2);
  return a;
}

double flow_stability_bound(const EpsFrame& ef, const Lattice& lat) {
  double mx = 0.0;
  FieldMatrix F;
  for (std::size_t z = 0; z < lat.size(); ++z) {
    if (!lat.interior(z, 1)) continue;
    ef.first_p_fields(lat.point(z), F);
    double r = 0.0;
    for (int i = 0; i < F.cols(); ++i)
      for (int j = 0; j < F.rows(); ++j) r += F(j, i) * F(j, i) / (lat.h(j) * lat.h(j));
    mx = std::max(mx, 2.0 * r);
  }
  return mx > 0.0 ? 1.0 / mx : std::numeric_limits<double>::infinity();
}

FlowState flow_step(const EpsFrame& ef, const FlowState& s, double dt) {
  const Lattice& lat = s.lat;
  if (lat.dim() != ef.n()) fail(ErrorKind::InvalidParameter, "lattice and frame dimensions differ");
  if (!(dt > 0.0)) fail(ErrorKind::InvalidParameter, "time step must be positive");
  const double bound = flow_stability_bound(ef, lat);
  if (dt > bound * (1.0 + 1e-12))
    fail(ErrorKind::StabilityError,
         "time step " + std::to_string(dt) + " exceeds the stability bound " + std::to_string(bound));
  FlowState out = s;
  out.t = s.t + dt;
  const std::vector<double>& u = s.u;
  const int p = ef.base().p;
  parallel_for(lat.size(), [&](std::size_t z) {
    if (s.dirichlet[z]) {
      out.u[z] = s.boundary[z];
      return;
    }
    const Vec x = lat.point(z);
    const Control xi = horizontal_gradient(ef, lat, u, z);
    const Eigen::MatrixXd C = coefficient_root(s.kind, xi);
    FieldMatrix F;
    ef.first_p_fields(x, F);
    double acc = 0.0, lo = u[z], hi = u[z];
    for (int k = 0; k < p; ++k) {
      const Eigen::VectorXd c = C.col(k);
      const Vec v = F * c;
      double m = 0.0;
      for (int j = 0; j < v.size(); ++j) m = std::max(m, std::abs(v[j]) / lat.h(j));
      if (m == 0.0) continue;
      const double lambda = 1.0 / m;
      for (double sign : {1.0, -1.0}) {
        Stencil st;
        lat.interpolate(clamp_to_box(lat, flow_along(ef, c, x, sign * lambda)), st);
        double val = 0.0;
        for (int q = 0; q < st.count; ++q) {
          const double w = u[st.index[static_cast<std::size_t>(q)]];
          val += st.weight[static_cast<std::size_t>(q)] * w;
          lo = std::min(lo, w), hi = std::max(hi, w);
        }
        acc += m * m * (val - u[z]);
      }
    }
    const double next = u[z] + dt * acc;
    if (!std::isfinite(next)) fail(ErrorKind::Diverged, "non-finite value at " + format_point(x));
    // The update is a convex combination of the values used; clamping only
    // removes rounding.
    out.u[z] = std::clamp(next, lo, hi);
  }, 128);
  return out;
}

FlowDiagnostics flow_diagnostics(const EpsFrame& ef, const FlowState& s) {
  const Lattice& lat = s.lat;
  const EpsFrame riem(ef.base(), 1.0);
  FlowDiagnostics d;
  d.t = s.t;
  d.sup_u = -std::numeric_limits<double>::infinity();
  d.inf_u = std::numeric_limits<double>::infinity();
  for (double v : s.u) d.sup_u = std::max(d.sup_u, v), d.inf_u = std::min(d.inf_u, v);
  std::vector<double> g1(lat.size(), 0.0), w(lat.size(), 0.0);
  parallel_for(lat.size(), [&](std::size_t z) {
    if (!lat.interior(z, 1)) return;
    g1[z] = grad1_norm(riem, lat, s.u, z);
    w[z] = std::sqrt(1.0 + horizontal_gradient(ef, lat, s.u, z).squaredNorm());
  }, 256);
  for (std::size_t z = 0; z < lat.size(); ++z) {
    if (!lat.interior(z, 1)) continue;
    d.sup_grad1 = std::max(d.sup_grad1, g1[z]);
    if (!lat.interior(z, 2)) d.sup_grad1_edge = std::max(d.sup_grad1_edge, g1[z]);
    d.energy += w[z];
  }
  d.energy *= lat.cell_volume();
  return d;
}

FlowRun run_flow(const EpsFrame& ef, const FlowState& initial, double t_end, double dt) {
  if (!(t_end >= initial.t)) fail(ErrorKind::InvalidParameter, "end time precedes the initial time");
  const double bound = flow_stability_bound(ef, initial.lat);
  if (dt == 0.0) dt = 0.9 * bound;
  const auto steps = static_cast<long long>(std::ceil((t_end - initial.t) / dt - 1e-9));
  const double h = steps > 0 ? (t_end - initial.t) / static_cast<double>(steps) : dt;
  FlowRun run;
  run.final = initial;
  run.history.push_back(flow_diagnostics(ef, initial));
  for (long long k = 1; k <= steps; ++k) {
    FlowState next = flow_step(ef, run.final, h);
    FlowDiagnostics d = flow_diagnostics(ef, next);
    d.step = k;
    for (std::size_t z = 0; z < next.u.size(); ++z)
      d.sup_dudt = std::max(d.sup_dudt, std::abs(next.u[z] - run.final.u[z]) / h);
    run.final = std::move(next);
    run.history.push_back(d);
  }
  return run;
}

ConvergenceStudy eps_convergence_study(const Frame& frame, const Lattice& lat, FlowKind kind, const ScalarFn& phi,
                                       const std::vector<double>& eps_list, double t_probe, double dt,
                                       double tolerance) {
  if (eps_list.size() < 2) fail(ErrorKind::InvalidParameter, "need at least two eps values");
  ConvergenceStudy st;
  st.eps = eps_list;
  st.tolerance = tolerance;
  if (dt == 0.0) {
    double b = std::numeric_limits<double>::infinity();
    for (double e : eps_list) b = std::min(b, flow_stability_bound(EpsFrame(frame, e), lat));
    dt = 0.9 * b;
  }
  for (double e : eps_list) {
    const EpsFrame ef(frame, e);
    st.states.push_back(run_flow(ef, make_flow_state(lat, e, kind, phi), t_probe, dt).final);
  }
  std::vector<std::size_t> probes;
  for (std::size_t z = 0; z < lat.size(); ++z) {
    bool inside = true;
    for (int k = 0; k < lat.dim(); ++k) {
      const Axis& a = lat.axis(k);
      if (a.periodic) continue;
      const double c = 0.5 * (a.lo + a.hi), half = 0.5 * (a.hi - a.lo);
      inside = inside && std::abs(lat.coord(z, k) - c) <= 0.5 * half + 1e-12;
    }
    if (inside) probes.push_back(z);
  }
  std::vector<std::vector<double>> local(eps_list.size() - 1);
  for (std::size_t k = 0; k + 1 < eps_list.size(); ++k) {
    double g = 0.0;
    for (std::size_t z : probes) {
      const double d = std::abs(st.states[k].u[z] - st.states[k + 1].u[z]);
      local[k].push_back(d);
      g = std::max(g, d);
    }
    st.gaps.push_back(g);
  }
  st.monotone = true;
  for (std::size_t k = 0; k + 1 < st.gaps.size(); ++k)
    if (st.gaps[k + 1] > st.gaps[k] + tolerance) st.monotone = false;
  std::size_t bad = 0, total = 0;
  for (std::size_t k = 0; k + 1 < local.size(); ++k)
    for (std::size_t i = 0; i < probes.size(); ++i, ++total)
      if (local[k + 1][i] > 2.0 * local[k][i] + tolerance) ++bad;
  st.violation_rate = total ? static_cast<double>(bad) / static_cast<double>(total) : 0.0;
  return st;
}

}  // namespace cclab
