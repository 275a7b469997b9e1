#include "cclab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cclab {

double parabolic_dist(const EpsFrame& ef, const ParabolicPoint& a, const ParabolicPoint& b, DistanceMethod method) {
  const double st = std::sqrt(std::abs(a.t - b.t));
  if ((a.x - b.x).norm() == 0.0) return st;
  double d = 0.0;
  switch (method) {
    case DistanceMethod::GaugeProxy:
      d = dist_gauge_proxy(ef, a.x, b.x).value;
      break;
    case DistanceMethod::ControlOpt:
      d = dist_control(ef, a.x, b.x, 8).value;
      break;
    case DistanceMethod::LatticeDijkstra: {
      const double guess = dist_gauge_proxy(ef, a.x, b.x).value;
      const Lattice lat = ball_lattice(ef, a.x, 2.0 * guess + 1e-3, 41);
      d = dist_lattice(ef, lat, a.x, b.x).value;
      break;
    }
  }
  return std::max(d, st);
}

PairMetric gauge_metric(const EpsFrame& ef) {
  return [ef](const Vec& x, const Vec& y) { return dist_gauge_proxy(ef, x, y).value; };
}

namespace {

struct PointRef {
  std::size_t node;
  std::size_t slice;
};

}  // namespace

HolderReport holder_norm(const SpaceTimeField& u, double alpha, const EpsFrame& ef, const HolderOptions& opts,
                         const std::vector<char>& region) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidParameter, "holder_norm: alpha must lie in (0,1)");
  if (!opts.exhaustive && opts.pairs < 1000) fail(ErrorKind::InvalidParameter, "holder_norm: at least 1000 pairs");
  if (u.values.size() != u.times.size()) fail(ErrorKind::InvalidParameter, "holder_norm: one slice per time");
  const Lattice& lat = u.lat;
  if (!region.empty() && region.size() != lat.size())
    fail(ErrorKind::InvalidParameter, "holder_norm: region size does not match the lattice");
  const PairMetric metric = opts.metric ? opts.metric : gauge_metric(ef);

  auto valid = [&](std::size_t node, std::size_t k) {
    return (region.empty() || region[node]) && std::isfinite(u.values[k][node]);
  };

  HolderReport rep;
  rep.alpha = alpha;
  std::vector<PointRef> pts;
  for (std::size_t k = 0; k < u.times.size(); ++k)
    for (std::size_t i = 0; i < lat.size(); ++i)
      if (valid(i, k)) {
        pts.push_back({i, k});
        rep.sup_norm = std::max(rep.sup_norm, std::abs(u.values[k][i]));
      }
  if (pts.empty()) return rep;

  std::vector<std::pair<PointRef, PointRef>> pairs;
  const std::size_t M = pts.size();
  if (opts.exhaustive) {
    pairs.reserve(M * (M - 1) / 2);
    for (std::size_t a = 0; a < M; ++a)
      for (std::size_t b = a + 1; b < M; ++b) pairs.push_back({pts[a], pts[b]});
  } else {
    pairs.reserve(opts.pairs);
    for (std::size_t i = 0; i < opts.pairs; ++i) {
      const auto a = std::min(M - 1, static_cast<std::size_t>(hash_uniform(opts.seed, 1, i) * static_cast<double>(M)));
      const auto b = std::min(M - 1, static_cast<std::size_t>(hash_uniform(opts.seed, 2, i) * static_cast<double>(M)));
      pairs.push_back({pts[a], pts[b]});
    }
    if (opts.nearest) {
      for (const PointRef& p : pts) {
        for (int j = 0; j < lat.dim(); ++j) {
          const std::size_t nb = lat.shift(p.node, j, 1);
          if (nb != Lattice::npos && nb != p.node && valid(nb, p.slice)) pairs.push_back({p, {nb, p.slice}});
        }
        if (p.slice + 1 < u.times.size() && valid(p.node, p.slice + 1))
          pairs.push_back({p, {p.node, p.slice + 1}});
      }
    }
  }

  std::vector<double> q(pairs.size(), 0.0);
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto& [a, b] = pairs[i];
    double d = std::sqrt(std::abs(u.times[a.slice] - u.times[b.slice]));
    if (a.node != b.node) d = std::max(d, metric(lat.point(a.node), lat.point(b.node)));
    if (d <= 0.0) return;
    q[i] = std::abs(u.values[a.slice][a.node] - u.values[b.slice][b.node]) / std::pow(d, alpha);
  }, 1024);

  std::size_t best = 0;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i] > q[best]) best = i;
  rep.pairs = pairs.size();
  if (!pairs.empty()) {
    rep.seminorm = q[best];
    const auto& [a, b] = pairs[best];
    rep.arg_pair[0] = {lat.point(a.node), u.times[a.slice]};
    rep.arg_pair[1] = {lat.point(b.node), u.times[b.slice]};
  }
  return rep;
}

SobolevReport sobolev_terms(const Lattice& lat, const std::vector<double>& u, int k, double p, const EpsFrame& ef) {
  if (k < 0 || k > 2) fail(ErrorKind::InvalidParameter, "sobolev_norm: order must be 0, 1 or 2");
  if (!(p >= 1.0)) fail(ErrorKind::InvalidParameter, "sobolev_norm: p must be at least 1");
  if (u.size() != lat.size()) fail(ErrorKind::InvalidParameter, "sobolev_norm: field size does not match the lattice");

  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < lat.size(); ++i)
    if (lat.interior(i, k)) nodes.push_back(i);
  if (nodes.empty()) fail(ErrorKind::OutOfDomain, "sobolev_norm: no node has a full order-" + std::to_string(k) + " stencil");

  SobolevReport rep;
  rep.nodes = nodes.size();
  const double cv = lat.cell_volume();
  auto lp = [&](const std::vector<double>& v) {
    double s = 0.0;
    if (std::isinf(p)) {
      for (std::size_t i : nodes) s = std::max(s, std::abs(v[i]));
      return s;
    }
    for (std::size_t i : nodes) s += std::pow(std::abs(v[i]), p);
    return std::pow(s * cv, 1.0 / p);
  };

  std::vector<std::pair<std::string, std::vector<double>>> level{{"", u}};
  for (int order = 0; order <= k; ++order) {
    std::vector<std::pair<std::string, std::vector<double>>> next;
    for (const auto& [word, v] : level) {
      rep.words.push_back(word);
      rep.terms.push_back(lp(v));
      if (order < k) {
        auto g = gradient_field(ef, lat, v);
        for (std::size_t i = 0; i < g.size(); ++i) next.push_back({word + std::to_string(i + 1), std::move(g[i])});
      }
    }
    level = std::move(next);
  }
  for (double t : rep.terms) rep.total += t;
  return rep;
}

double sobolev_norm(const Lattice& lat, const std::vector<double>& u, int k, double p, const EpsFrame& ef) {
  return sobolev_terms(lat, u, k, p, ef).total;
}

std::vector<char> central_region(const Lattice& lat, double fraction) {
  std::vector<char> in(lat.size(), 1);
  for (std::size_t i = 0; i < lat.size(); ++i)
    for (int j = 0; j < lat.dim(); ++j) {
      const Axis& a = lat.axis(j);
      if (a.periodic) continue;
      const double c = 0.5 * (a.lo + a.hi), hw = 0.5 * (a.hi - a.lo);
      if (std::abs(lat.coord(i, j) - c) > fraction * hw + 1e-12 * hw) {
        in[i] = 0;
        break;
      }
    }
  return in;
}

SchauderReport schauder_ratio(const EpsFrame& ef, const CoeffFieldFn& A, const SpaceTimeFn& w,
                              const SchauderSetup& setup) {
  const Lattice& lat = setup.lat;
  if (setup.times.empty()) fail(ErrorKind::InvalidParameter, "schauder_ratio: no time slices");
  if (!(setup.k_fraction > 0.0 && setup.k_fraction < setup.kdelta_fraction && setup.kdelta_fraction < 1.0))
    fail(ErrorKind::InvalidParameter, "schauder_ratio: need 0 < K fraction < K_delta fraction < 1");
  const auto K = central_region(lat, setup.k_fraction);
  const auto Kd = central_region(lat, setup.kdelta_fraction);
  for (std::size_t i = 0; i < lat.size(); ++i)
    if (Kd[i] && !lat.interior(i, 2)) fail(ErrorKind::OutOfDomain, "schauder_ratio: K_delta reaches the stencil margin");

  const int p = ef.base().p;
  const std::size_t T = setup.times.size();
  auto make_field = [&]() {
    SpaceTimeField f;
    f.lat = lat;
    f.times = setup.times;
    f.values.resize(T);
    return f;
  };
  SpaceTimeField W = make_field(), F = make_field();
  std::vector<SpaceTimeField> D1(static_cast<std::size_t>(p), make_field());
  std::vector<SpaceTimeField> D2(static_cast<std::size_t>(p * p), make_field());

  const double tau = 1e-4;
  for (std::size_t k = 0; k < T; ++k) {
    const double t = setup.times[k];
    std::vector<double> wk(lat.size()), wt(lat.size());
    parallel_for(lat.size(), [&](std::size_t i) {
      const Vec x = lat.point(i);
      wk[i] = w(x, t);
      wt[i] = (w(x, t + tau) - w(x, t - tau)) / (2.0 * tau);
    });
    auto g = gradient_field(ef, lat, wk);
    std::vector<double> fk = wt;
    for (int a = 0; a < p; ++a) {
      auto gg = gradient_field(ef, lat, g[static_cast<std::size_t>(a)]);
      for (int b = 0; b < p; ++b) D2[static_cast<std::size_t>(a * p + b)].values[k] = std::move(gg[static_cast<std::size_t>(b)]);
    }
    for (std::size_t i = 0; i < lat.size(); ++i) {
      if (!lat.interior(i, 2)) {
        fk[i] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      Eigen::MatrixXd a = A ? A(lat.point(i), t) : Eigen::MatrixXd::Identity(p, p);
      double s = 0.0;
      for (int r = 0; r < p; ++r)
        for (int c = 0; c < p; ++c) {
          if (ef.weight(r) == 0.0 || ef.weight(c) == 0.0) continue;
          s += a(r, c) * D2[static_cast<std::size_t>(r * p + c)].values[k][i];
        }
      fk[i] -= s;
    }
    F.values[k] = std::move(fk);
    for (int a = 0; a < p; ++a) D1[static_cast<std::size_t>(a)].values[k] = std::move(g[static_cast<std::size_t>(a)]);
    W.values[k] = std::move(wk);
  }

  const double alpha = setup.alpha;
  SchauderReport rep;
  rep.eps = ef.eps();
  rep.alpha = alpha;
  for (const auto& d : D2) rep.c2a_norm += holder_norm(d, alpha, ef, setup.holder, K).total();
  rep.ca_f_norm = holder_norm(F, alpha, ef, setup.holder, Kd).total();
  rep.c1a_norm = holder_norm(W, alpha, ef, setup.holder, Kd).total();
  for (const auto& d : D1) rep.c1a_norm += holder_norm(d, alpha, ef, setup.holder, Kd).total();
  const double den = rep.ca_f_norm + rep.c1a_norm;
  if (!(den >= 1e-14)) fail(ErrorKind::DegenerateDenominator, "schauder_ratio: denominator vanishes");
  rep.ratio = rep.c2a_norm / den;
  return rep;
}

}  // namespace cclab
