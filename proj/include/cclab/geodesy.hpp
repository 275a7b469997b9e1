#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cclab/core.hpp"
#include "cclab/frames.hpp"
#include "cclab/lattice.hpp"

namespace cclab {

enum class DistanceMethod { LatticeDijkstra, ControlOpt, GaugeProxy };
const char* to_string(DistanceMethod m);

struct DistanceResult {
  double value = 0.0;
  DistanceMethod method = DistanceMethod::LatticeDijkstra;
  bool upper_bound_flag = false;  // true when the witness path ends exactly at y
  bool converged = true;          // control_opt: endpoint reached within tolerance
  double endpoint_error = 0.0;
  std::vector<Vec> witness_path;
};

// ---------------------------------------------------------------------------
// Flows

/// Integrates x' = sum_a u_a F_a(x) over time T with RK4 (F = active fields).
Vec flow(const EpsFrame& ef, const Vec& x, const Control& u, double T, int substeps);
/// Same with an arbitrary n x q coefficient callback.
Vec flow_fields(const Frame& f, const Vec& x, const Control& coeff, double T, int substeps);

// ---------------------------------------------------------------------------
// Lattice shortest paths

struct DistanceOptions {
  int ring_directions = 32;          // unit controls per pair of fields when q == 2
  int sphere_directions = 128;       // extra quasi-uniform directions when q == 3
  std::vector<double> step_cells = {1.0, 1.5, 3.0};
  std::vector<double> loop_cells = {1.0, 2.0, 4.0};  // bracket loop displacement
  bool bracket_moves = true;
  int substeps = 1;
  double max_cost = 1e300;  // labels beyond this cost are not expanded
};

/// Single-source label-setting solution on a lattice. Every label stores the
/// exact end point of an admissible polygonal path and its cost.
class DistanceField {
 public:
  const Lattice& lattice() const { return lat_; }
  const Vec& source() const { return source_; }
  double cost(std::size_t node) const { return cost_[node]; }
  Vec position(std::size_t node) const;
  bool reached(std::size_t node) const;

  /// Interpolated distance from the source to y. Throws ResolutionTooCoarse
  /// when no surrounding node was reached.
  double value_at(const Vec& y) const;
  /// Same but returns +inf instead of throwing.
  double try_value_at(const Vec& y) const;
  std::vector<Vec> witness(const Vec& y) const;
  double max_edge_cost() const { return max_edge_; }
  std::size_t settled() const { return settled_; }

 private:
  friend DistanceField distance_field(const EpsFrame&, const Lattice&, const Vec&, const DistanceOptions&);
  double corner_value(std::size_t node, const Vec& y) const;

  Lattice lat_;
  Vec source_;
  std::size_t source_node_ = 0;
  int n_ = 0;
  std::vector<double> cost_;
  std::vector<double> pos_;  // n per node
  std::vector<double> vel_;  // unit-speed arrival velocity, n per node
  std::vector<std::int64_t> pred_;
  FieldMatrix source_fields_;
  double max_edge_ = 0.0;
  std::size_t settled_ = 0;
};

DistanceField distance_field(const EpsFrame& ef, const Lattice& lat, const Vec& x,
                             const DistanceOptions& opts = {});

DistanceResult dist_lattice(const EpsFrame& ef, const Lattice& lat, const Vec& x, const Vec& y,
                            const DistanceOptions& opts = {});

/// Lattice with `nodes` points per axis (odd, centered at x) fitted to the
/// ball of radius R around x by coarse pilot solves.
Lattice ball_lattice(const EpsFrame& ef, const Vec& x, double R, int nodes,
                     const DistanceOptions& opts = {});

// ---------------------------------------------------------------------------
// Control shooting

struct ControlOptions {
  int restarts = 8;
  int max_iterations = 200;
  int substeps = 4;  // RK4 steps per segment
  std::uint64_t seed = 0x5eed;
};

DistanceResult dist_control(const EpsFrame& ef, const Vec& x, const Vec& y, int segments,
                            const ControlOptions& opts = {});

// ---------------------------------------------------------------------------
// Heisenberg gauges (X1 = d1 - x2 d3, X2 = d2 + x1 d3)

double gauge_heis(const Vec& x);
double gauge_heis_eps(const Vec& x, double eps);
/// y^{-1} x under (x)(y) = (x1+y1, x2+y2, x3+y3-(x2 y1 - x1 y2)).
Vec heis_left_difference(const Vec& y, const Vec& x);
/// d_{G,eps}(x, y) = N_eps(y^{-1} x).
double heis_gauge_distance(const Vec& x, const Vec& y, double eps);

// ---------------------------------------------------------------------------
// Exponential coordinates

struct ExpCoords {
  Vec x0;
  Vec coords;
  std::vector<int> basis;  // indices of the Y's used
  double residual = 0.0;
};

/// First n linearly independent fields among Y_1..Y_p at x0.
std::vector<int> exp_basis(const Frame& frame, const Vec& x0);
Vec exp_map(const Frame& frame, const std::vector<int>& basis, const Vec& x0, const Vec& c);
ExpCoords exp_coords(const Frame& frame, const Vec& x0, const Vec& x);

double quasi_norm_equiregular(const Frame& frame, const Vec& x0, const Vec& x, double eps);
bool box_ball_membership(const Frame& frame, const Vec& x0, const Vec& x, double r, double eps);

/// Cheap distance surrogate: Heisenberg gauge, Euclidean norm, or the
/// equiregular quasi-norm, depending on the frame.
DistanceResult dist_gauge_proxy(const EpsFrame& ef, const Vec& x, const Vec& y);

}  // namespace cclab
