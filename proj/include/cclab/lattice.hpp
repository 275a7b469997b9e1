#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "cclab/core.hpp"

namespace cclab {

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  int nodes = 3;
  bool periodic = false;  // periodic axes span exactly 2*pi starting at lo

  double spacing() const;
};

/// Multilinear interpolation weights over the corners of one lattice cell.
struct Stencil {
  int count = 0;
  std::array<std::size_t, 64> index{};
  std::array<double, 64> weight{};
};

/// Rectangular sample grid over a box, row-major with the last axis fastest.
class Lattice {
 public:
  Lattice() = default;
  explicit Lattice(std::vector<Axis> axes);

  /// Uniform box [lo,hi]^n with the same node count on every axis.
  static Lattice cube(int dim, double lo, double hi, int nodes);

  int dim() const { return static_cast<int>(axes_.size()); }
  const Axis& axis(int k) const { return axes_[static_cast<std::size_t>(k)]; }
  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t size() const { return size_; }
  std::size_t stride(int k) const { return stride_[static_cast<std::size_t>(k)]; }
  double h(int k) const { return h_[static_cast<std::size_t>(k)]; }
  double cell_volume() const { return cell_volume_; }
  double diameter() const;
  double box_volume() const;

  int coord_index(std::size_t node, int k) const {
    return static_cast<int>((node / stride_[static_cast<std::size_t>(k)]) %
                            static_cast<std::size_t>(axes_[static_cast<std::size_t>(k)].nodes));
  }
  double coord(std::size_t node, int k) const {
    return axes_[static_cast<std::size_t>(k)].lo + h_[static_cast<std::size_t>(k)] * coord_index(node, k);
  }
  Vec point(std::size_t node) const;

  /// Node with all indices given; periodic axes wrap, others must be in range.
  std::size_t node_at(const std::array<int, kMaxDim>& idx) const;

  /// Index of the neighbor `offset` steps along axis k, or npos if it leaves
  /// a non-periodic axis.
  std::size_t shift(std::size_t node, int k, int offset) const;

  /// True when every non-periodic index is at least `margin` from the edge.
  bool interior(std::size_t node, int margin = 1) const;
  bool on_boundary(std::size_t node) const { return !interior(node, 1); }

  bool contains(const Vec& x) const;
  /// Wraps periodic coordinates into [lo, lo + 2 pi).
  Vec wrap(const Vec& x) const;
  std::size_t nearest(const Vec& x) const;
  /// Multilinear weights for x; returns false if x lies outside the box.
  bool interpolate(const Vec& x, Stencil& out) const;
  double sample(const std::vector<double>& field, const Vec& x) const;

  std::string describe() const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> stride_;
  std::vector<double> h_;
  std::size_t size_ = 0;
  double cell_volume_ = 0.0;
};

}  // namespace cclab
