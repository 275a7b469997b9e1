#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cclab/core.hpp"
#include "cclab/lattice.hpp"

namespace cclab {

/// A Hörmander system: horizontal generators Y_1..Y_m followed by enumerated
/// commutators Y_{m+1}..Y_p, each with its degree. Indices are 0-based in code.
class Frame {
 public:
  using EvalFn = std::function<void(const Vec& x, FieldMatrix& out)>;
  /// Exact Jacobian of field i at x (J(a,b) = d Y_i^a / d x_b).
  using JacobianFn = std::function<void(const Vec& x, int i, Jacobian& out)>;

  std::string name;
  int n = 0;     // ambient dimension
  int m = 0;     // horizontal generators
  int p = 0;     // enumerated fields
  int step = 1;  // largest degree
  std::vector<int> degree;
  std::vector<Axis> domain;  // declared box; periodic axes are S^1 factors
  bool hormander_smooth = true;
  EvalFn eval;
  JacobianFn jacobian;  // empty when brackets fall back to finite differences

  /// n x p coefficient matrix; periodic coordinates are wrapped first.
  void fields(const Vec& x, FieldMatrix& out) const;
  Vec field(int i, const Vec& x) const;
  Jacobian field_jacobian(int i, const Vec& x) const;

  /// [Y_i, Y_j](x) = DY_j Y_i - DY_i Y_j.
  Vec bracket(int i, int j, const Vec& x) const;
  /// Centered finite-difference bracket, step 1e-5 times the box diameter.
  Vec bracket_fd(int i, int j, const Vec& x) const;

  double diameter() const;
  bool in_domain(const Vec& x) const;
  Vec wrap(const Vec& x) const;
  Lattice lattice(int nodes_per_axis) const;

  /// Smallest singular value ratio of the coefficient matrix at x.
  double rank_margin(const Vec& x) const;
  void validate() const;
};

/// Built-in names: heisenberg1, rototranslation, grushin, example32,
/// euclidean<n> (e.g. euclidean3) or euclidean(n).
Frame builtin_frame(const std::string& name);
std::vector<std::string> builtin_frame_names();

/// Reads a frame description (see README for the format).
Frame parse_frame(const std::string& text);
Frame load_frame_file(const std::string& path);
/// Built-in name, or path to a frame file.
Frame resolve_frame(const std::string& name_or_path);

/// The epsilon-weighted frame with 2p - m fields: Y_1..Y_m, eps^{d-1} Y_i for
/// m < i <= p, then unweighted copies of Y_{m+1}..Y_p carrying their degrees.
class EpsFrame {
 public:
  EpsFrame(Frame base, double eps);

  const Frame& base() const { return base_; }
  double eps() const { return eps_; }
  int n() const { return base_.n; }
  int count() const { return 2 * base_.p - base_.m; }
  int eps_degree(int i) const;
  double weight(int i) const { return weight_[static_cast<std::size_t>(i)]; }

  /// All 2p - m weighted fields, n x count().
  void fields(const Vec& x, FieldMatrix& out) const;
  Vec field(int i, const Vec& x) const;

  /// Indices among the first p with nonzero weight: the fields that carry the
  /// distance d_eps and the operator sum of squares.
  const std::vector<int>& active() const { return active_; }
  int q() const { return static_cast<int>(active_.size()); }
  bool is_horizontal_only() const { return q() == base_.m; }
  /// n x q matrix of the active weighted fields.
  void active_fields(const Vec& x, FieldMatrix& out) const;
  /// Exact (or finite-difference) Jacobian of active field a.
  Jacobian active_jacobian(int a, const Vec& x) const;

  /// The first p weighted fields (including zero ones), n x p.
  void first_p_fields(const Vec& x, FieldMatrix& out) const;

 private:
  Frame base_;
  double eps_;
  std::vector<double> weight_;
  std::vector<int> active_;
  bool active_prefix_ = false;
};

EpsFrame make_eps_frame(const Frame& frame, double eps);

/// (X_1^eps u, ..., X_p^eps u) at an interior node by centered differences.
Control horizontal_gradient(const EpsFrame& ef, const Lattice& lat, const std::vector<double>& u,
                            std::size_t node);

/// Applies the first p weighted fields to u at every node with a full
/// centered stencil; entries at other nodes are NaN. out[i][node].
std::vector<std::vector<double>> gradient_field(const EpsFrame& ef, const Lattice& lat,
                                                const std::vector<double>& u);

}  // namespace cclab
