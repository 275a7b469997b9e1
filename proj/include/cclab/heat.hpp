#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cclab/frames.hpp"
#include "cclab/geodesy.hpp"
#include "cclab/lattice.hpp"

namespace cclab {

/// Constant symmetric p x p coefficient matrix with ellipticity constant lambda.
struct CoeffMatrix {
  Eigen::MatrixXd A;
  double lambda = 1.0;

  static CoeffMatrix identity(int p);
  /// Throws InvalidParameter unless A is exactly symmetric, its spectrum lies
  /// in [1/(2 lambda), 2 lambda] and the leading m x m block's spectrum lies
  /// in [1/lambda, lambda].
  void validate(int m) const;
};

/// Kernel samples on a lattice at a ladder of times. values[k][node] is a
/// density (mass per unit volume).
struct KernelField {
  Lattice lattice;
  Vec source;
  std::vector<double> times;
  std::vector<std::vector<double>> values;
  std::vector<double> mass;
  std::string method;
  double dt = 0.0;
  long long paths = 0;
  std::uint64_t seed = 0;

  std::size_t last() const { return times.size() - 1; }
  double sample(std::size_t k, const Vec& x) const { return lattice.sample(values[k], x); }
};

struct HeatOptions {
  std::vector<double> times;  // increasing, > 0
  double dt = 0.0;            // 0 picks 0.9 of the stability bound
  bool smoothed_delta = false;  // Gaussian of width 2h instead of one node
  double max_mass_loss = 0.02;
};

/// Lattice with `nodes` points per axis fitted to the ball of radius
/// reach * sqrt(t) around y, which holds all but a negligible kernel mass.
Lattice heat_lattice(const EpsFrame& ef, const Vec& y, double t, int nodes, double reach = 5.0);

/// Largest stable time step of the explicit Markov-chain scheme on `lat`.
double heat_stability_bound(const EpsFrame& ef, const CoeffMatrix& A, const Lattice& lat);

/// Explicit monotone scheme for  u_t = sum_ij a_ij X_i^eps X_j^eps u  started
/// from a unit point mass at the node nearest y; zero outside the box.
KernelField heat_fd(const EpsFrame& ef, const CoeffMatrix& A, const Lattice& lat, const Vec& y,
                    const HeatOptions& opts);
KernelField heat_fd(const EpsFrame& ef, const CoeffMatrix& A, const Lattice& lat, const Vec& y, double t_end,
                    double dt = 0.0);
/// Same scheme from arbitrary nonnegative initial density u0 (one value per node).
KernelField heat_evolve(const EpsFrame& ef, const CoeffMatrix& A, const Lattice& lat,
                        const std::vector<double>& u0, const HeatOptions& opts);

/// n x q diffusion fields at a point, for the stochastic solver.
using FieldFn = std::function<void(const Vec& x, FieldMatrix& out)>;

struct PathOptions {
  long long paths = 100000;
  int steps = 256;
  std::uint64_t seed = 1;
};

/// Stratonovich flow dX = sum_i sqrt(2) F_i(X) o dW_i (Heun steps), whose
/// generator is sum_i F_i^2; end points are deposited with multilinear
/// weights on `lat` (only the first lat.dim() coordinates are used).
KernelField heat_paths(const FieldFn& fields, int n, const Lattice& lat, const Vec& y, double t,
                       const PathOptions& opts);
/// Sum-of-squares kernel of the active eps fields (A = identity).
KernelField heat_mc(const EpsFrame& ef, const Lattice& lat, const Vec& y, double t, long long paths,
                    std::uint64_t seed = 1);

/// Redistributes the masses of every time slice onto a coarser lattice.
KernelField restrict_kernel(const KernelField& k, const Lattice& coarse);
/// sum |a - b| / sum |b| over the last time slices; lattices must match.
double relative_l1(const KernelField& a, const KernelField& b);

// ---------------------------------------------------------------------------
// Heisenberg lift: X1, X2 on x, Z1 = d_z1 + z2 d_z3, Z2 = d_z2 - z1 d_z3, and
// Z3 + eps Y3 with Z3 = d_z3.

Frame lifted_heisenberg_frame(double eps);
KernelField lift_h1_kernel(double eps, const Lattice& lat6, const Vec& y6, double t, const PathOptions& opts);
/// Integrates out the trailing axes, keeping the first `keep` coordinates.
KernelField marginalize(const KernelField& k, int keep = 3);

// ---------------------------------------------------------------------------
// Gaussian envelopes

struct GaussianFit {
  double eps = 0.0;
  double t = 0.0;
  double C_lambda = 0.0;  // single constant of the two-sided bound
  double C_upper = 0.0;   // P |B| <= C_upper exp(-c_exp_upper d^2 / t)
  double C_lower = 0.0;   // P |B| >= C_lower exp(-c_exp_lower d^2 / t)
  double c_exp_upper = 0.0;
  double c_exp_lower = 0.0;
  double fit_residual = 0.0;  // rms of the log-linear fit
  double bracketed = 0.0;     // fraction of fit points inside the C_lambda envelopes
  std::size_t points = 0;
};

struct FitOptions {
  double radius_factor = 3.0;  // fit region d <= radius_factor sqrt(t)
  double floor = 1e-12;
  int boundary_margin = 4;     // nodes
  double coverage = 0.98;
  std::size_t min_points = 50;
};

/// Fits log(P |B(y, sqrt t)|) against -d^2/t on time slice k. `dist` holds
/// d_eps(y, node) for every node of the kernel lattice.
GaussianFit gaussian_fit(const KernelField& kernel, std::size_t k, const std::vector<double>& dist,
                         double volume, double eps, const FitOptions& opts = {});

/// d_eps(source, node) for every node of `lat` via interpolation in df.
std::vector<double> node_distances(const DistanceField& df, const Lattice& lat);

// ---------------------------------------------------------------------------
// Harnack cylinders Q- = B(x, rho) x (t - 8 rho^2, t - 7 rho^2),
// Q+ = B(x, rho) x (t - rho^2, t).

struct HarnackResult {
  double sup_ratio = 0.0;   // sup_{Q-} u / inf_{Q+} u
  double mean_ratio = 0.0;  // avg_{Q-} u / inf_{Q+} u
  double sup_minus = 0.0;
  double inf_plus = 0.0;
  std::size_t ball_nodes = 0;
};

/// Cylinder time samples used by harnack_ratio (five per cylinder).
std::vector<double> harnack_times(double rho, double tbar);

/// Evaluates the ratios from a solution sampled at harnack_times(rho, tbar)
/// and a ball membership mask.
HarnackResult harnack_from_samples(const std::vector<std::vector<double>>& u, const std::vector<char>& ball);

HarnackResult harnack_ratio(const EpsFrame& ef, const CoeffMatrix& A, const Lattice& lat,
                            const std::vector<double>& u0, double rho, const Vec& xbar, double tbar);

}  // namespace cclab
