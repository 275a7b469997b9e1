#include "cclab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace cclab {

double Axis::spacing() const {
  if (periodic) return 2.0 * std::numbers::pi / nodes;
  return (hi - lo) / (nodes - 1);
}

Lattice::Lattice(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || static_cast<int>(axes_.size()) > kMaxDim)
    fail(ErrorKind::InvalidParameter, "lattice dimension must be in 1..6");
  for (auto& a : axes_) {
    if (a.nodes < 3) fail(ErrorKind::InvalidParameter, "lattice axes need at least 3 nodes");
    if (a.periodic) a.hi = a.lo + 2.0 * std::numbers::pi;
    if (!(a.hi > a.lo)) fail(ErrorKind::InvalidParameter, "lattice axis with empty extent");
  }
  const std::size_t n = axes_.size();
  stride_.assign(n, 1);
  h_.resize(n);
  for (std::size_t k = n; k-- > 0;) {
    if (k + 1 < n) stride_[k] = stride_[k + 1] * static_cast<std::size_t>(axes_[k + 1].nodes);
  }
  size_ = stride_[0] * static_cast<std::size_t>(axes_[0].nodes);
  cell_volume_ = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    h_[k] = axes_[k].spacing();
    cell_volume_ *= h_[k];
  }
}

Lattice Lattice::cube(int dim, double lo, double hi, int nodes) {
  return Lattice(std::vector<Axis>(static_cast<std::size_t>(dim), Axis{lo, hi, nodes, false}));
}

double Lattice::diameter() const {
  double s = 0.0;
  for (const auto& a : axes_) s += (a.hi - a.lo) * (a.hi - a.lo);
  return std::sqrt(s);
}

double Lattice::box_volume() const {
  double v = 1.0;
  for (const auto& a : axes_) v *= a.hi - a.lo;
  return v;
}

Vec Lattice::point(std::size_t node) const {
  Vec x(dim());
  for (int k = 0; k < dim(); ++k) x[k] = coord(node, k);
  return x;
}

std::size_t Lattice::node_at(const std::array<int, kMaxDim>& idx) const {
  std::size_t node = 0;
  for (int k = 0; k < dim(); ++k) {
    const int n = axes_[static_cast<std::size_t>(k)].nodes;
    int i = idx[static_cast<std::size_t>(k)];
    if (axes_[static_cast<std::size_t>(k)].periodic) {
      i %= n;
      if (i < 0) i += n;
    } else if (i < 0 || i >= n) {
      return npos;
    }
    node += static_cast<std::size_t>(i) * stride_[static_cast<std::size_t>(k)];
  }
  return node;
}

std::size_t Lattice::shift(std::size_t node, int k, int offset) const {
  const auto& a = axes_[static_cast<std::size_t>(k)];
  const int i = coord_index(node, k);
  int j = i + offset;
  if (a.periodic) {
    j %= a.nodes;
    if (j < 0) j += a.nodes;
  } else if (j < 0 || j >= a.nodes) {
    return npos;
  }
  const auto s = stride_[static_cast<std::size_t>(k)];
  return node + s * static_cast<std::size_t>(j) - s * static_cast<std::size_t>(i);
}

bool Lattice::interior(std::size_t node, int margin) const {
  for (int k = 0; k < dim(); ++k) {
    const auto& a = axes_[static_cast<std::size_t>(k)];
    if (a.periodic) continue;
    const int i = coord_index(node, k);
    if (i < margin || i >= a.nodes - margin) return false;
  }
  return true;
}

bool Lattice::contains(const Vec& x) const {
  if (x.size() != dim()) return false;
  for (int k = 0; k < dim(); ++k) {
    const auto& a = axes_[static_cast<std::size_t>(k)];
    if (a.periodic) continue;
    const double tol = 1e-12 * (a.hi - a.lo);
    if (!(x[k] >= a.lo - tol && x[k] <= a.hi + tol)) return false;
  }
  return true;
}

Vec Lattice::wrap(const Vec& x) const {
  Vec y = x;
  for (int k = 0; k < dim(); ++k) {
    const auto& a = axes_[static_cast<std::size_t>(k)];
    if (!a.periodic) continue;
    const double two_pi = 2.0 * std::numbers::pi;
    double t = std::fmod(y[k] - a.lo, two_pi);
    if (t < 0) t += two_pi;
    if (t >= two_pi) t = 0.0;
    y[k] = a.lo + t;
  }
  return y;
}

std::size_t Lattice::nearest(const Vec& x) const {
  if (!contains(x)) return npos;
  std::array<int, kMaxDim> idx{};
  const Vec y = wrap(x);
  for (int k = 0; k < dim(); ++k) {
    const auto& a = axes_[static_cast<std::size_t>(k)];
    int i = static_cast<int>(std::lround((y[k] - a.lo) / h_[static_cast<std::size_t>(k)]));
    if (!a.periodic) i = std::clamp(i, 0, a.nodes - 1);
    idx[static_cast<std::size_t>(k)] = i;
  }
  return node_at(idx);
}

bool Lattice::interpolate(const Vec& x, Stencil& out) const {
  if (!contains(x)) return false;
  const int n = dim();
  std::array<int, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  for (int k = 0; k < n; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const auto& a = axes_[ku];
    double s = (x[k] - a.lo) / h_[ku];
    if (a.periodic) {
      s = std::fmod(s, static_cast<double>(a.nodes));
      if (s < 0) s += a.nodes;
      int i = static_cast<int>(std::floor(s));
      if (i >= a.nodes) i = 0, s = 0.0;
      base[ku] = i;
      frac[ku] = s - i;
    } else {
      s = std::clamp(s, 0.0, static_cast<double>(a.nodes - 1));
      int i = std::min(static_cast<int>(std::floor(s)), a.nodes - 2);
      base[ku] = i;
      frac[ku] = s - i;
    }
  }
  out.count = 0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    double w = 1.0;
    std::size_t node = 0;
    for (int k = 0; k < n; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const int bit = (corner >> k) & 1;
      w *= bit ? frac[ku] : 1.0 - frac[ku];
      int i = base[ku] + bit;
      if (i >= axes_[ku].nodes) i -= axes_[ku].nodes;  // periodic wrap
      node += static_cast<std::size_t>(i) * stride_[ku];
    }
    if (w == 0.0) continue;
    out.index[static_cast<std::size_t>(out.count)] = node;
    out.weight[static_cast<std::size_t>(out.count)] = w;
    ++out.count;
  }
  return true;
}

double Lattice::sample(const std::vector<double>& field, const Vec& x) const {
  Stencil st;
  if (!interpolate(x, st)) fail(ErrorKind::OutOfDomain, "sample point " + format_point(x) + " outside lattice");
  double v = 0.0;
  for (int c = 0; c < st.count; ++c) v += st.weight[static_cast<std::size_t>(c)] * field[st.index[static_cast<std::size_t>(c)]];
  return v;
}

std::string Lattice::describe() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& a : axes_) os << a.lo << ':' << a.hi << ':' << a.nodes << (a.periodic ? "p" : "") << ' ';
  return os.str();
}

}  // namespace cclab
