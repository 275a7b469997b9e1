#include <cmath>

#include "cclab/heat.hpp"
#include "support.hpp"

using namespace cclab;

namespace {

constexpr double kPi = 3.14159265358979323846;

double sum_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double sum_abs(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

// Expected value of the multilinear deposit along one axis: a centered
// Gaussian of variance s2 averaged against the hat function of width h.
double hat_gaussian(double z, double s2, double h) {
  const int n = 400;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double s = -h + 2 * h * i / n;
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    acc += w * (1 - std::abs(s) / h) / h * std::exp(-(z - s) * (z - s) / (2 * s2)) / std::sqrt(2 * kPi * s2);
  }
  return acc * (2 * h / n) / 3;
}

}  // namespace

TEST_CASE("one-dimensional kernel matches the Gaussian") {
  const EpsFrame ef(builtin_frame("euclidean1"), 0.0);
  const Lattice lat = Lattice::cube(1, -2, 2, 401);
  const KernelField k = heat_fd(ef, CoeffMatrix::identity(1), lat, Vec::Zero(1), 0.1);
  double err = 0.0, peak = 0.0;
  for (std::size_t z = 0; z < lat.size(); ++z) {
    const double x = lat.coord(z, 0);
    const double g = std::exp(-x * x / 0.4) / std::sqrt(4 * kPi * 0.1);
    err = std::max(err, std::abs(k.values[0][z] - g));
    peak = std::max(peak, g);
  }
  CHECK(err <= 0.02 * peak);
}

TEST_CASE("kernel positivity and mass") {
  const EpsFrame ef(builtin_frame("heisenberg1"), 0.5);
  const Lattice lat = heat_lattice(ef, Vec::Zero(3), 0.1, 25);
  HeatOptions o;
  o.times = {0.02, 0.05, 0.1};
  const KernelField k = heat_fd(ef, CoeffMatrix::identity(3), lat, Vec::Zero(3), o);
  REQUIRE(k.values.size() == 3);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(k.mass[s] >= 0.99);
    CHECK(k.mass[s] <= 1.01);
    double total = 0.0;
    for (double v : k.values[s]) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(total * lat.cell_volume() == doctest::Approx(k.mass[s]).epsilon(1e-9));
  }
}

TEST_CASE("heisenberg kernel is symmetric under inversion") {
  const EpsFrame ef(builtin_frame("heisenberg1"), 1.0);
  const Lattice lat({{-1.5, 1.5, 31}, {-1.5, 1.5, 31}, {-3.0, 3.0, 41}});
  const KernelField k = heat_fd(ef, CoeffMatrix::identity(3), lat, Vec::Zero(3), 0.05);
  double worst = 0.0, peak = 0.0;
  for (std::size_t z = 0; z < lat.size(); ++z) {
    const std::size_t m = lat.nearest(-lat.point(z));
    worst = std::max(worst, std::abs(k.values[0][z] - k.values[0][m]));
    peak = std::max(peak, k.values[0][z]);
  }
  CHECK(worst <= 0.01 * peak);
}

TEST_CASE("semigroup property") {
  struct Case {
    const char* frame;
    double eps;
    Lattice lat;
  };
  const std::vector<Case> cases{{"euclidean2", 0.0, Lattice::cube(2, -2, 2, 61)},
                                {"heisenberg1", 0.5, Lattice::cube(3, -1.6, 1.6, 25)}};
  for (const Case& c : cases) {
    const EpsFrame ef(builtin_frame(c.frame), c.eps);
    const CoeffMatrix A = CoeffMatrix::identity(ef.base().p);
    const double dt = 0.5 * heat_stability_bound(ef, A, c.lat);
    HeatOptions o;
    o.dt = dt;
    o.times = {0.04, 0.1};
    const KernelField direct = heat_fd(ef, A, c.lat, Vec::Zero(ef.n()), o);
    HeatOptions rest;
    rest.dt = dt;
    rest.times = {0.06};
    const KernelField composed = heat_evolve(ef, A, c.lat, direct.values[0], rest);
    const double rel = sum_abs_diff(composed.values.back(), direct.values[1]) / sum_abs(direct.values[1]);
    CHECK(rel <= 0.05);
  }
}

TEST_CASE("stability and parameter errors") {
  const EpsFrame ef(builtin_frame("euclidean1"), 0.0);
  const Lattice lat = Lattice::cube(1, -1, 1, 41);
  const CoeffMatrix I = CoeffMatrix::identity(1);
  CHECK_ERROR_KIND(heat_fd(ef, I, lat, Vec::Zero(1), 0.1, 10 * heat_stability_bound(ef, I, lat)), StabilityError);
  CHECK_ERROR_KIND(heat_fd(ef, I, lat, Vec::Zero(1), 2.0), DomainTooSmall);
  CoeffMatrix bad;
  bad.A = Eigen::MatrixXd::Identity(3, 3);
  bad.A(0, 1) = 0.2;
  CHECK_ERROR_KIND(bad.validate(2), InvalidParameter);
}

TEST_CASE("euclidean path estimator against the binned Gaussian") {
  const EpsFrame ef(builtin_frame("euclidean2"), 0.0);
  const double t = 0.1, h = 0.25;
  const Lattice lat = Lattice::cube(2, -2.5, 2.5, 21);
  const KernelField k = heat_mc(ef, lat, Vec::Zero(2), t, 100000, 5);
  double err = 0.0, peak = 0.0;
  for (std::size_t z = 0; z < lat.size(); ++z) {
    const double e = hat_gaussian(lat.coord(z, 0), 2 * t, h) * hat_gaussian(lat.coord(z, 1), 2 * t, h);
    err = std::max(err, std::abs(k.values[0][z] - e));
    peak = std::max(peak, e);
  }
  CHECK(err <= 0.05 * peak);
}

TEST_CASE("vertical spread of the heisenberg diffusion grows like t") {
  // dx3 = sqrt(2) (x1 dW2 - x2 dW1) gives E[x3^2] = 4 t^2 exactly.
  const EpsFrame ef(builtin_frame("heisenberg1"), 0.0);
  const Lattice lat({Axis{-2.5, 2.5, 21, false}, Axis{-2.5, 2.5, 21, false}, Axis{-2.0, 2.0, 161, false}});
  for (double t : {0.05, 0.2}) {
    const KernelField k = heat_mc(ef, lat, Vec::Zero(3), t, 100000, 8);
    double var = 0.0;
    for (std::size_t z = 0; z < lat.size(); ++z) var += k.values[0][z] * lat.coord(z, 2) * lat.coord(z, 2);
    var *= lat.cell_volume();
    CHECK(var / (t * t) == doctest::Approx(4.0).epsilon(0.2));
  }
}

TEST_CASE("gaussian envelope of the euclidean kernel") {
  const EpsFrame ef(builtin_frame("euclidean2"), 0.0);
  const double t = 0.1;
  const Lattice lat = Lattice::cube(2, -2, 2, 81);
  const KernelField k = heat_fd(ef, CoeffMatrix::identity(2), lat, Vec::Zero(2), t);
  std::vector<double> dist(lat.size());
  for (std::size_t z = 0; z < lat.size(); ++z) dist[z] = lat.point(z).norm();
  const GaussianFit f = gaussian_fit(k, 0, dist, kPi * t, 0.0);
  CHECK(f.C_upper / f.C_lower <= 1.5);
  CHECK(f.c_exp_upper == doctest::Approx(0.25).epsilon(0.2));
  CHECK(f.c_exp_lower == doctest::Approx(0.25).epsilon(0.2));
  CHECK(f.points >= 50);

  std::vector<double> far(lat.size(), 100.0);
  CHECK_ERROR_KIND(gaussian_fit(k, 0, far, kPi * t, 0.0), InsufficientData);
}

TEST_CASE("lifted kernel marginal keeps the mass") {
  const double eps = 0.5;
  const Lattice lat6 = Lattice::cube(6, -1.5, 1.5, 7);
  PathOptions o;
  o.paths = 100000;
  o.steps = 64;
  o.seed = 3;
  const KernelField k6 = lift_h1_kernel(eps, lat6, Vec::Zero(6), 0.05, o);
  const KernelField k3 = marginalize(k6, 3);
  CHECK(k3.lattice.dim() == 3);
  CHECK(k3.mass[0] == doctest::Approx(k6.mass[0]).epsilon(1e-12));
  double total = 0.0;
  for (double v : k3.values[0]) total += v;
  CHECK(total * k3.lattice.cell_volume() == doctest::Approx(k6.mass[0]).epsilon(1e-9));
}

TEST_CASE("lifted fields project onto the eps fields") {
  // Any lifted control u moves x by X1 u1 + X2 u2 + eps Y3 u5, an admissible
  // velocity of cost at most |u|; lifted distances never undercut d_eps.
  const double eps = 0.3;
  const Frame lift = lifted_heisenberg_frame(eps);
  const EpsFrame ef(builtin_frame("heisenberg1"), eps);
  CHECK(lift.n == 6);
  CHECK(lift.m == 5);
  const Vec p = vec({0.3, -0.4, 0.1, 0.7, -0.2, 0.5});
  FieldMatrix L, F;
  lift.fields(p, L);
  ef.first_p_fields(p.head(3), F);
  CHECK((L.block(0, 0, 3, 1) - F.col(0)).norm() < 1e-14);
  CHECK((L.block(0, 1, 3, 1) - F.col(1)).norm() < 1e-14);
  CHECK(L.block(0, 2, 3, 1).norm() == 0.0);
  CHECK(L.block(0, 3, 3, 1).norm() == 0.0);
  CHECK((L.block(0, 4, 3, 1) - F.col(2)).norm() < 1e-14);
}

TEST_CASE("harnack ratio") {
  std::vector<std::vector<double>> ones(10, std::vector<double>(8, 1.0));
  const std::vector<char> ball(8, 1);
  const HarnackResult r = harnack_from_samples(ones, ball);
  CHECK(r.sup_ratio == 1.0);
  CHECK(r.mean_ratio == 1.0);

  const EpsFrame ef(builtin_frame("euclidean2"), 0.0);
  const Lattice lat = Lattice::cube(2, -3, 3, 61);
  const std::vector<double> u1(lat.size(), 1.0);
  const HarnackResult c = harnack_ratio(ef, CoeffMatrix::identity(2), lat, u1, 0.1, Vec::Zero(2), 0.125);
  CHECK(c.sup_ratio == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(c.ball_nodes > 0);

  const std::vector<double> u0(lat.size(), 0.0);
  CHECK_ERROR_KIND(harnack_ratio(ef, CoeffMatrix::identity(2), lat, u0, 0.1, Vec::Zero(2), 0.125), DegenerateInfimum);
}
