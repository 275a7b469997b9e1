#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cclab/frames.hpp"
#include "cclab/geodesy.hpp"
#include "cclab/lattice.hpp"

namespace cclab {

struct ParabolicPoint {
  Vec x;
  double t = 0.0;
};

/// max(d_eps(x1, x2), sqrt|t1 - t2|).
double parabolic_dist(const EpsFrame& ef, const ParabolicPoint& a, const ParabolicPoint& b,
                      DistanceMethod method = DistanceMethod::GaugeProxy);

/// Values on a lattice at several times; values[k][node]. NaN marks nodes
/// where the field is undefined (for example outside a difference stencil).
struct SpaceTimeField {
  Lattice lat;
  std::vector<double> times;
  std::vector<std::vector<double>> values;
};

/// Spatial distance used by the Hoelder quotients.
using PairMetric = std::function<double(const Vec&, const Vec&)>;
/// dist_gauge_proxy of ef, which is comparable to d_eps with constants
/// independent of eps.
PairMetric gauge_metric(const EpsFrame& ef);

struct HolderOptions {
  std::size_t pairs = 1000;  // seeded random pairs, at least 1000
  std::uint64_t seed = 1;
  bool nearest = true;       // add every nearest-neighbor pair in space and time
  bool exhaustive = false;   // all pairs instead of sampling
  PairMetric metric;         // empty: gauge_metric(ef)
};

struct HolderReport {
  double alpha = 0.0;
  double sup_norm = 0.0;
  double seminorm = 0.0;
  ParabolicPoint arg_pair[2];
  std::size_t pairs = 0;

  double total() const { return seminorm + sup_norm; }
};

/// Sampled C^alpha norm over the finite entries of u, restricted to `region`
/// (one flag per node) when it is non-empty.
HolderReport holder_norm(const SpaceTimeField& u, double alpha, const EpsFrame& ef, const HolderOptions& opts = {},
                         const std::vector<char>& region = {});

struct SobolevReport {
  double total = 0.0;
  std::vector<std::string> words;  // "" for u itself, "12" for X_1 X_2 u
  std::vector<double> terms;
  std::size_t nodes = 0;           // summation region: nodes with margin k
};

/// Lattice L^p norms of all iterated differences X_i1 ... X_ij u, j <= k <= 2,
/// summed over the nodes with margin k. p may be infinity.
SobolevReport sobolev_terms(const Lattice& lat, const std::vector<double>& u, int k, double p, const EpsFrame& ef);
double sobolev_norm(const Lattice& lat, const std::vector<double>& u, int k, double p, const EpsFrame& ef);

// ---------------------------------------------------------------------------
// Schauder ratio for a manufactured solution: f = w_t - sum a_ij X_i X_j w is
// computed from w with the same difference operators used in the norms.

using SpaceTimeFn = std::function<double(const Vec& x, double t)>;
using CoeffFieldFn = std::function<Eigen::MatrixXd(const Vec& x, double t)>;

struct SchauderSetup {
  Lattice lat;
  std::vector<double> times;
  double alpha = 0.5;
  double k_fraction = 0.4;       // K: central box of this fraction of each half width
  double kdelta_fraction = 0.7;  // K_delta
  HolderOptions holder;
};

struct SchauderReport {
  double eps = 0.0;
  double alpha = 0.0;
  double c2a_norm = 0.0;   // sum of C^alpha norms of X_i X_j w on K
  double ca_f_norm = 0.0;  // C^alpha norm of f on K_delta
  double c1a_norm = 0.0;   // C^alpha norms of w and X_i w on K_delta
  double ratio = 0.0;
};

/// Empty A means the identity.
SchauderReport schauder_ratio(const EpsFrame& ef, const CoeffFieldFn& A, const SpaceTimeFn& w,
                              const SchauderSetup& setup);

/// Nodes whose non-periodic coordinates lie within `fraction` of the half
/// width around the box center.
std::vector<char> central_region(const Lattice& lat, double fraction);

}  // namespace cclab
