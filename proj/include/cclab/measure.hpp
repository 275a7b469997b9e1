#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cclab/frames.hpp"
#include "cclab/geodesy.hpp"
#include "cclab/lattice.hpp"

namespace cclab {

struct VolumeEstimate {
  Vec center;
  double radius = 0.0;
  double eps = 0.0;
  double volume = 0.0;
  double stderr_ = 0.0;  // binomial proportion error times box volume
  long long sample_count = 0;
  std::string method = "montecarlo";
};

/// det(X^eps_{i_1}(x), ..., X^eps_{i_n}(x)); indices 0-based into the
/// 2p - m weighted fields.
double lambda_det(const EpsFrame& ef, const std::vector<int>& I, const Vec& x);

struct NswTerm {
  std::vector<int> I;
  double lambda = 0.0;  // |lambda_I|
  int degree = 0;       // sum of eps-degrees
};

struct NswPolynomial {
  std::vector<NswTerm> terms;
  double value_at(double r) const;
};

/// All increasing n-tuples with nonzero determinant.
NswPolynomial nsw_polynomial(const EpsFrame& ef, const Vec& x);
double nsw_volume(const EpsFrame& ef, const Vec& x, double r);
/// Tuple maximizing |lambda_I| r^{d(I)} (exact argmax).
std::vector<int> best_tuple(const EpsFrame& ef, const Vec& x, double r);

struct VolumeOptions {
  long long samples = 100000;
  std::uint64_t seed = 1;
  int nodes = 41;  // per axis for fitted lattices
  DistanceOptions distance;
};

/// Monte-Carlo volume of B_eps(x, r) using a distance field on `lat`.
VolumeEstimate ball_volume_mc(const EpsFrame& ef, const Lattice& lat, const Vec& x, double r,
                              long long samples, std::uint64_t seed, const DistanceOptions& d = {});
/// Same, sampling the bounding box of a precomputed distance field.
VolumeEstimate ball_volume_mc(const DistanceField& df, double eps, double r, long long samples,
                              std::uint64_t seed);
/// Same on a lattice fitted to the ball.
VolumeEstimate ball_volume_mc(const EpsFrame& ef, const Vec& x, double r, const VolumeOptions& o);
/// Counts lattice nodes inside the ball instead of sampling.
VolumeEstimate ball_volume_count(const DistanceField& df, double eps, double r);

double doubling_ratio(const EpsFrame& ef, const Lattice& lat, const Vec& x, double r, long long samples,
                      std::uint64_t seed, const DistanceOptions& d = {});
double doubling_ratio(const EpsFrame& ef, const Vec& x, double r, const VolumeOptions& o);

struct TestFunction {
  std::string name;
  std::function<double(const Vec&)> f;
};

/// Coordinates, products x_i x_j, three seeded bumps, and a mollified sign
/// across the hyperplane x_1 = x0_1, all scaled to the ball radius r.
std::vector<TestFunction> default_test_functions(int n, const Vec& x0, double r, std::uint64_t seed);

struct PoincareReport {
  double ratio = 0.0;  // max over the test set
  std::string argmax;
  std::vector<double> per_function;  // NaN for excluded functions
};

/// max_u  int_{B(x,r)} |u - u_B| / (r int_{B(x,2r)} |grad_eps u|) with lattice sums.
PoincareReport poincare_ratio(const EpsFrame& ef, const Lattice& lat, const Vec& x, double r,
                              const std::vector<TestFunction>& tests, const DistanceOptions& d = {});
PoincareReport poincare_ratio(const EpsFrame& ef, const DistanceField& df, double r,
                              const std::vector<TestFunction>& tests);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
/// Least-squares fit of log y against log x.
SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace cclab
